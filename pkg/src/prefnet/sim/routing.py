"""Chain-aware routing and path delay.

Requests are routed greedily per chain segment: from the current position,
go to the nearest up node (shortest total delay, ties by lowest node id)
hosting at least one instance of the next required VNF type, then finally
to the destination.  The resulting node sequence may revisit nodes.
"""
from __future__ import annotations

from dataclasses import dataclass, field


class RoutingError(Exception):
    pass


class Unroutable(RoutingError):
    """No valid SFC path exists for the request in the current deployment."""


class NodeDown(RoutingError):
    """The request references a node that is currently down."""


@dataclass
class SfcPath:
    """Node sequence plus (type_index, serving_node) assignments in chain order."""

    nodes: list
    serving: list = field(default_factory=list)

    def visits(self, node):
        return node in self.nodes


def path_delay(topology, path):
    """Sum of edge delays along the node sequence; 0 for a single-node path."""
    nodes = path.nodes if isinstance(path, SfcPath) else list(path)
    total = 0.0
    for a, b in zip(nodes, nodes[1:]):
        if not topology.has_edge(a, b):
            raise ValueError(f"no edge between consecutive path nodes {a} and {b}")
        total += topology.delay(a, b)
    return total


def _nearest(topology, src, candidates):
    """Closest reachable candidate from src; ties by lowest node id."""
    dist, _ = topology.shortest_from(src)
    best = None
    best_d = float("inf")
    for c in sorted(candidates):
        if dist[c] < best_d:
            best_d = dist[c]
            best = c
    return best


def _extend(topology, nodes, target):
    seg = topology.shortest_path(nodes[-1], target)
    if seg is None:
        raise Unroutable(f"node {target} unreachable from {nodes[-1]}")
    nodes.extend(seg[1:])


def route_sfc(topology, deployment, request, catalog=None):
    """Route one request through its chain; deterministic given inputs."""
    from prefnet.sim.catalog import DEFAULT_CATALOG

    catalog = catalog or DEFAULT_CATALOG
    if not topology.is_up(request.src):
        raise NodeDown(f"source node {request.src} is down")
    if not topology.is_up(request.dst):
        raise NodeDown(f"destination node {request.dst} is down")

    nodes = [request.src]
    serving = []
    for t in catalog.chain_indices(request.service_type):
        hosts = [h for h in deployment.hosts(t) if topology.is_up(h)]
        if not hosts:
            raise Unroutable(f"no instance of {catalog.types[t]} deployed anywhere")
        target = _nearest(topology, nodes[-1], hosts)
        if target is None:
            raise Unroutable(f"no reachable instance of {catalog.types[t]}")
        _extend(topology, nodes, target)
        serving.append((t, target))
    _extend(topology, nodes, request.dst)
    return SfcPath(nodes=nodes, serving=serving)


def validate_path(topology, deployment, request, path, catalog=None):
    """Independent check of the SfcPath contract; raises ValueError on breach.

    Checks: endpoints match the request, consecutive nodes are connected,
    and the chain is served in order by hosting nodes that appear in the
    node sequence at non-decreasing positions.
    """
    from prefnet.sim.catalog import DEFAULT_CATALOG

    catalog = catalog or DEFAULT_CATALOG
    if path.nodes[0] != request.src:
        raise ValueError("path does not start at the request source")
    if path.nodes[-1] != request.dst:
        raise ValueError("path does not end at the request destination")
    for a, b in zip(path.nodes, path.nodes[1:]):
        if not topology.has_edge(a, b):
            raise ValueError(f"path skips between unconnected nodes {a} and {b}")
    chain = catalog.chain_indices(request.service_type)
    if [t for t, _ in path.serving] != chain:
        raise ValueError("serving assignments do not follow the requested chain")
    cursor = 0
    for t, node in path.serving:
        if deployment.counts[node, t] < 1:
            raise ValueError(f"node {node} serves type {t} without an instance")
        while cursor < len(path.nodes) and path.nodes[cursor] != node:
            cursor += 1
        if cursor == len(path.nodes):
            raise ValueError(f"serving node {node} not visited in chain order")
    return True
