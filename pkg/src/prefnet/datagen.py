"""Dataset generation: synthetic time-varying traffic, random service
requests, heuristic initial deployments with random perturbation, SLA
calibration at the 95th delay percentile, and contiguous 8:1:1 splitting.

The full pipeline is deterministic per (topology, seed): saved dataset files
are byte-identical across runs. An ingestion hook for real traffic matrices
(one whitespace-separated row of n*n intensities per timestep, the layout
used by public Abilene traffic archives) is provided as `traffic_from_tsv`.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from prefnet.sim.catalog import DEFAULT_CATALOG, ServiceRequest
from prefnet.sim.deployment import Deployment
from prefnet.sim.routing import Unroutable, path_delay, route_sfc
from prefnet.sim.topology import Topology, load_topology

# Generation seeds the packaged topologies ship with: under the default
# DatagenConfig they calibrate to the reference SLA thresholds (1125 ms on
# internet2, 51 ms on mec) within a few percent.
FIXTURE_SEEDS = {"internet2": 0, "mec": 0}


@dataclass
class DatagenConfig:
    horizon: int = 480          # timesteps of synthetic traffic
    mean_flows: float = 6.0     # average requests per timestep
    min_flows: int = 0          # floor; 0 skips empty timesteps
    bw_low: float = 10.0
    bw_high: float = 100.0
    perturb_frac: float = 0.3   # fraction of (node, type) cells nudged +-1
    diurnal_amp: float = 0.6
    noise_sigma: float = 0.25

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not (0 < self.bw_low <= self.bw_high):
            raise ValueError("bandwidth range must satisfy 0 < low <= high")
        if not (0.0 <= self.perturb_frac <= 1.0):
            raise ValueError("perturb_frac must be in [0, 1]")
        if self.mean_flows <= 0:
            raise ValueError("mean_flows must be positive")
        if not (0.0 <= self.diurnal_amp < 1.0):
            raise ValueError("diurnal_amp must be in [0, 1)")

    def to_json(self):
        return {k: getattr(self, k) for k in (
            "horizon", "mean_flows", "min_flows", "bw_low", "bw_high",
            "perturb_frac", "diurnal_amp", "noise_sigma")}

    @classmethod
    def from_json(cls, obj):
        return cls(**obj)


@dataclass
class TrafficPattern:
    intensity: np.ndarray  # (horizon, n, n), zero diagonal, >= 0

    def __post_init__(self):
        self.intensity = np.asarray(self.intensity, dtype=np.float64)
        if self.intensity.ndim != 3 or self.intensity.shape[0] < 1:
            raise ValueError("intensity must be (horizon >= 1, n, n)")
        if np.any(self.intensity < 0):
            raise ValueError("intensities must be non-negative")

    @property
    def horizon(self):
        return self.intensity.shape[0]

    def totals(self):
        return self.intensity.sum(axis=(1, 2))


@dataclass
class DatasetRecord:
    t: int
    requests: list        # ServiceRequest, >= 1
    deployment: np.ndarray  # (n_nodes, n_types) int64 counts

    def __post_init__(self):
        if len(self.requests) < 1:
            raise ValueError("a dataset record needs at least one request")
        self.deployment = np.asarray(self.deployment, dtype=np.int64)
        Deployment(self.deployment)  # reuse its invariant checks

    def to_json(self):
        return {"t": self.t,
                "requests": [r.to_json() for r in self.requests],
                "deployment": self.deployment.tolist()}

    @classmethod
    def from_json(cls, obj):
        return cls(t=int(obj["t"]),
                   requests=[ServiceRequest.from_json(r) for r in obj["requests"]],
                   deployment=np.asarray(obj["deployment"], dtype=np.int64))


@dataclass
class DatasetMeta:
    topology: str
    sla_ms: float
    counts: dict          # {"train": n, "val": n, "test": n}
    seed: int
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.sla_ms <= 0:
            raise ValueError("sla_ms must be positive")
        for k in ("train", "val", "test"):
            if self.counts.get(k, -1) < 0:
                raise ValueError(f"missing or negative count for split '{k}'")

    def to_json(self):
        return {"topology": self.topology, "sla_ms": self.sla_ms,
                "counts": dict(self.counts), "seed": self.seed,
                "config": dict(self.config)}

    @classmethod
    def from_json(cls, obj):
        return cls(topology=obj["topology"], sla_ms=float(obj["sla_ms"]),
                   counts=dict(obj["counts"]), seed=int(obj["seed"]),
                   config=dict(obj.get("config", {})))


@dataclass
class Dataset:
    records: list
    meta: DatasetMeta
    topology: Topology

    def __post_init__(self):
        if sum(self.meta.counts.values()) != len(self.records):
            raise ValueError("split counts do not partition the records")

    def slice(self, split):
        """Records of one contiguous split: train, then val, then test."""
        n_train = self.meta.counts["train"]
        n_val = self.meta.counts["val"]
        if split == "train":
            return self.records[:n_train]
        if split == "val":
            return self.records[n_train:n_train + n_val]
        if split == "test":
            return self.records[n_train + n_val:]
        raise ValueError(f"unknown split '{split}'")


# ---- traffic ----

def synth_traffic(seed, topology, horizon, amp=0.6, noise_sigma=0.25):
    """Diurnal sinusoid (period 24, shared phase) scaled per (src, dst) pair
    and roughened by lognormal noise. Deterministic per seed."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    rng = np.random.default_rng(seed)
    n = topology.n_nodes
    pair_scale = rng.lognormal(mean=0.0, sigma=0.5, size=(n, n))
    np.fill_diagonal(pair_scale, 0.0)
    t = np.arange(horizon)
    diurnal = 1.0 + amp * np.sin(2.0 * np.pi * (t - 6.0) / 24.0)
    noise = rng.lognormal(mean=0.0, sigma=noise_sigma, size=(horizon, n, n))
    intensity = diurnal[:, None, None] * pair_scale[None, :, :] * noise
    return TrafficPattern(np.maximum(intensity, 0.0))


def traffic_from_tsv(path, n_nodes):
    """Ingest a real traffic matrix file: one timestep per line, n*n
    whitespace-separated intensities in row-major node order."""
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            vals = [float(x) for x in line.split()]
            if len(vals) != n_nodes * n_nodes:
                raise ValueError(
                    f"line {lineno}: expected {n_nodes * n_nodes} values, "
                    f"got {len(vals)}")
            rows.append(np.asarray(vals).reshape(n_nodes, n_nodes))
    if not rows:
        raise ValueError("traffic file holds no timesteps")
    return TrafficPattern(np.stack(rows))


# ---- requests ----

def gen_requests(pattern, topology, catalog, seed, mean_flows=6.0,
                 min_flows=0, bw_low=10.0, bw_high=100.0):
    """Per-timestep request lists. Flow count is proportional to aggregate
    intensity (scaled so the average is `mean_flows`); each request draws
    uniform src != dst, Unif[bw_low, bw_high) bandwidth, and a uniform
    service type. Timesteps with zero flows yield empty lists."""
    if not topology.up_nodes():
        raise ValueError("topology has no up nodes")
    if topology.n_nodes < 2:
        raise ValueError("need at least two nodes to draw src != dst")
    rng = np.random.default_rng(seed)
    n = topology.n_nodes
    chain_names = list(catalog.chains)
    totals = pattern.totals()
    mean_total = totals.mean()
    if mean_total <= 0:
        return [[] for _ in range(pattern.horizon)]
    per_step = []
    for t in range(pattern.horizon):
        count = int(round(mean_flows * totals[t] / mean_total))
        count = max(count, min_flows)
        reqs = []
        for _ in range(count):
            src = int(rng.integers(n))
            d = int(rng.integers(n - 1))
            dst = d if d < src else d + 1
            bw = float(rng.uniform(bw_low, bw_high))
            kind = chain_names[int(rng.integers(len(chain_names)))]
            reqs.append(ServiceRequest(src=src, dst=dst, bandwidth=bw,
                                       service_type=kind))
        per_step.append(reqs)
    return per_step


# ---- deployment ----

def _betweenness_order(topology):
    """Node ids sorted by descending betweenness centrality (delay-weighted),
    ties by ascending id."""
    import networkx as nx
    g = nx.Graph()
    g.add_nodes_from(range(topology.n_nodes))
    for i, j, delay in topology.edge_list():
        g.add_edge(i, j, delay=delay)
    cent = nx.betweenness_centrality(g, weight="delay")
    return sorted(range(topology.n_nodes), key=lambda v: (-cent[v], v))


def init_deployment(topology, requests, catalog, rng, perturb_frac=0.3,
                    order=None):
    """Greedy central placement covering aggregate bandwidth demand, then a
    random +-1 nudge on `perturb_frac` of the cells (clamped at 0), then a
    feasibility guard that re-adds any requested type that got zeroed."""
    n = topology.n_nodes
    n_types = len(catalog.types)
    counts = np.zeros((n, n_types), dtype=np.int64)
    if not requests:  # nothing to cover, and nothing to perturb around
        return Deployment(counts)
    order = _betweenness_order(topology) if order is None else order

    demand = np.zeros(n_types)
    needed = set()
    for req in requests:
        for f in catalog.chain_indices(req.service_type):
            demand[f] += req.bandwidth
            needed.add(f)
    slot = 0
    for f in range(n_types):
        for _ in range(math.ceil(demand[f] / catalog.instance_capacity)):
            counts[order[slot % len(order)], f] += 1
            slot += 1

    n_cells = n * n_types
    k = int(round(perturb_frac * n_cells))
    if k:
        cells = rng.choice(n_cells, size=k, replace=False)
        signs = rng.integers(0, 2, size=k) * 2 - 1
        flat = counts.reshape(-1)
        for cell, sign in zip(cells, signs):
            flat[cell] = max(0, flat[cell] + sign)

    for f in needed:
        if counts[:, f].sum() == 0:
            counts[order[0], f] = 1
    return Deployment(counts)


# ---- calibration and splitting ----

def calibrate_sla(records, topology, catalog=None):
    """95th percentile (linear interpolation) of all routed path delays when
    each record's requests run against its own initial deployment."""
    catalog = catalog or DEFAULT_CATALOG
    delays = []
    for rec in records:
        dep = Deployment(rec.deployment)
        for req in rec.requests:
            try:
                p = route_sfc(topology, dep, req, catalog)
            except Unroutable:
                continue
            delays.append(path_delay(topology, p))
    if len(delays) < 20:
        raise ValueError(f"need >= 20 routed paths to calibrate, got {len(delays)}")
    return float(np.percentile(delays, 95.0))


def split(records, seed=None):
    """Contiguous-time 8:1:1 split: floor(N/10) records each for val and
    test, the leading remainder for train. `seed` is accepted for interface
    symmetry; the split never shuffles."""
    n = len(records)
    if n < 10:
        raise ValueError("need >= 10 records to split 8:1:1")
    hold = n // 10
    return records[:n - 2 * hold], records[n - 2 * hold:n - hold], records[n - hold:]


# ---- pipeline ----

def generate_dataset(topology, seed, config=None, catalog=None):
    """(topology, seed) -> Dataset, deterministically."""
    config = config or DatagenConfig()
    catalog = catalog or DEFAULT_CATALOG
    streams = np.random.SeedSequence(seed).spawn(3)
    pattern = synth_traffic(streams[0], topology, config.horizon,
                            amp=config.diurnal_amp,
                            noise_sigma=config.noise_sigma)
    per_step = gen_requests(pattern, topology, catalog, streams[1],
                            mean_flows=config.mean_flows,
                            min_flows=config.min_flows,
                            bw_low=config.bw_low, bw_high=config.bw_high)
    deploy_rng = np.random.default_rng(streams[2])
    order = _betweenness_order(topology)
    records = []
    for t, reqs in enumerate(per_step):
        if not reqs:
            continue
        dep = init_deployment(topology, reqs, catalog, deploy_rng,
                              perturb_frac=config.perturb_frac, order=order)
        records.append(DatasetRecord(t=t, requests=reqs, deployment=dep.counts))
    train, val, test = split(records)
    sla = calibrate_sla(records, topology, catalog)
    meta = DatasetMeta(topology=topology.name, sla_ms=sla,
                       counts={"train": len(train), "val": len(val),
                               "test": len(test)},
                       seed=int(seed), config=config.to_json())
    return Dataset(records=records, meta=meta, topology=topology.copy())


def save_dataset(dataset, out_dir):
    """records.ndjson + meta.json + topology.json; byte-stable given equal
    inputs (sorted keys, no timestamps)."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "records.ndjson"), "w") as fh:
        for rec in dataset.records:
            fh.write(json.dumps(rec.to_json(), sort_keys=True,
                                separators=(",", ":")) + "\n")
    with open(os.path.join(out_dir, "meta.json"), "w") as fh:
        json.dump(dataset.meta.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "topology.json"), "w") as fh:
        json.dump(dataset.topology.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_dataset(path):
    """Load a dataset directory written by save_dataset."""
    with open(os.path.join(path, "meta.json")) as fh:
        meta = DatasetMeta.from_json(json.load(fh))
    topology = load_topology(os.path.join(path, "topology.json"))
    records = []
    with open(os.path.join(path, "records.ndjson")) as fh:
        for line in fh:
            if line.strip():
                records.append(DatasetRecord.from_json(json.loads(line)))
    return Dataset(records=records, meta=meta, topology=topology)
