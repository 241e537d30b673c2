"""Network topology: nodes with compute capacity, undirected delay-weighted edges.

Topology files are JSON:

    {"name": "internet2",
     "nodes": [{"id": 0, "cpu_capacity": 1000.0}, ...],
     "edges": [{"i": 0, "j": 1, "delay_ms": 97.0}, ...]}

Node ids must be the consecutive integers 0..n-1 so they can double as
matrix row indices.  Edges are undirected, self-edges are rejected, and
every delay must be strictly positive.
"""
from __future__ import annotations

import heapq
import json
from importlib import resources


class Topology:
    def __init__(self, cpu_capacity, edges, name="topology"):
        """cpu_capacity: per-node compute units; edges: list of (i, j, delay_ms)."""
        self.name = name
        self.cpu_capacity = [float(c) for c in cpu_capacity]
        self.n_nodes = len(self.cpu_capacity)
        self._delay = {}
        self._neighbors = [[] for _ in range(self.n_nodes)]
        for i, j, d in edges:
            self._add_edge(int(i), int(j), float(d))
        for nbrs in self._neighbors:
            nbrs.sort()
        self.up = [True] * self.n_nodes
        self._sp_epoch = 0
        self._sp_cache = {}
        self._validate()

    def _add_edge(self, i, j, delay):
        if i == j:
            raise ValueError(f"self-edge at node {i}")
        if delay <= 0:
            raise ValueError(f"edge ({i},{j}) has non-positive delay {delay}")
        if not (0 <= i < self.n_nodes and 0 <= j < self.n_nodes):
            raise ValueError(f"edge ({i},{j}) references unknown node")
        if (i, j) in self._delay:
            raise ValueError(f"duplicate edge ({i},{j})")
        self._delay[(i, j)] = delay
        self._delay[(j, i)] = delay
        self._neighbors[i].append(j)
        self._neighbors[j].append(i)

    def _validate(self):
        for c in self.cpu_capacity:
            if c <= 0:
                raise ValueError("cpu_capacity must be positive")
        if self.n_nodes > 1 and not self._connected():
            raise ValueError("topology is not connected")

    def _connected(self):
        seen = {0}
        stack = [0]
        while stack:
            for m in self._neighbors[stack.pop()]:
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        return len(seen) == self.n_nodes

    # -- status ---------------------------------------------------------

    def is_up(self, node):
        return self.up[node]

    def set_status(self, node, status_up):
        """Mark a node up or down.  Down nodes drop out of routing entirely."""
        if not (0 <= node < self.n_nodes):
            raise ValueError(f"unknown node {node}")
        if self.up[node] != bool(status_up):
            self.up[node] = bool(status_up)
            self._sp_epoch += 1
            self._sp_cache.clear()

    def up_nodes(self):
        return [n for n in range(self.n_nodes) if self.up[n]]

    # -- edges ----------------------------------------------------------

    def delay(self, i, j):
        """Delay of the edge between i and j; KeyError if they are not connected."""
        return self._delay[(i, j)]

    def has_edge(self, i, j):
        return (i, j) in self._delay

    def neighbors(self, i):
        return list(self._neighbors[i])

    def edge_list(self):
        """Each undirected edge once, as (i, j, delay) with i < j."""
        return sorted((i, j, d) for (i, j), d in self._delay.items() if i < j)

    # -- shortest paths ---------------------------------------------------

    def shortest_from(self, src):
        """Dijkstra over up nodes from src: (dist, predecessor) lists.

        Down nodes and their edges are excluded.  Ties are resolved by
        processing nodes in (distance, id) order and relaxing neighbors in
        ascending id order, so results are deterministic.
        """
        key = src
        hit = self._sp_cache.get(key)
        if hit is not None:
            return hit
        inf = float("inf")
        dist = [inf] * self.n_nodes
        pred = [-1] * self.n_nodes
        if self.up[src]:
            dist[src] = 0.0
            heap = [(0.0, src)]
            done = [False] * self.n_nodes
            while heap:
                d, u = heapq.heappop(heap)
                if done[u]:
                    continue
                done[u] = True
                for v in self._neighbors[u]:
                    if not self.up[v]:
                        continue
                    nd = d + self._delay[(u, v)]
                    if nd < dist[v]:
                        dist[v] = nd
                        pred[v] = u
                        heapq.heappush(heap, (nd, v))
        self._sp_cache[key] = (dist, pred)
        return dist, pred

    def shortest_path(self, src, dst):
        """Node sequence of a shortest src->dst path, or None if unreachable."""
        dist, pred = self.shortest_from(src)
        if dist[dst] == float("inf"):
            return None
        path = [dst]
        while path[-1] != src:
            path.append(pred[path[-1]])
        path.reverse()
        return path

    # -- serialization ----------------------------------------------------

    def copy(self):
        t = Topology(self.cpu_capacity, self.edge_list(), name=self.name)
        t.up = list(self.up)
        return t

    def to_json(self):
        return {
            "name": self.name,
            "nodes": [{"id": n, "cpu_capacity": self.cpu_capacity[n]} for n in range(self.n_nodes)],
            "edges": [{"i": i, "j": j, "delay_ms": d} for i, j, d in self.edge_list()],
        }

    @classmethod
    def from_json(cls, obj):
        nodes = sorted(obj["nodes"], key=lambda r: r["id"])
        ids = [r["id"] for r in nodes]
        if ids != list(range(len(ids))):
            raise ValueError("node ids must be consecutive integers starting at 0")
        edges = [(e["i"], e["j"], e["delay_ms"]) for e in obj["edges"]]
        return cls([r["cpu_capacity"] for r in nodes], edges, name=obj.get("name", "topology"))


def fixture_path(name):
    """Filesystem path of a packaged topology fixture ('internet2' or 'mec')."""
    ref = resources.files("prefnet.fixtures") / f"{name}.json"
    return str(ref)


def load_topology(path_or_name):
    """Load a topology from a JSON file path, or by packaged fixture name."""
    path = str(path_or_name)
    if not path.endswith(".json"):
        path = fixture_path(path)
    with open(path) as f:
        return Topology.from_json(json.load(f))
