"""Per-node power model driven by assigned traffic load.

A node that is down, or hosts no VNF instance, draws nothing.  Otherwise it
draws p_idle plus a linear ramp to p_max as its load ratio approaches 1.
Load is the bandwidth assigned to the node by routing: every chain element
served at a node attributes the full request bandwidth to it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PowerModel:
    p_idle: float = 100.0
    p_max: float = 200.0

    def __post_init__(self):
        if not (0 <= self.p_idle <= self.p_max):
            raise ValueError("power model requires 0 <= p_idle <= p_max")


def assigned_loads(n_nodes, paths, requests):
    """Bandwidth attributed to each node by serving assignments, shape (n,)."""
    loads = np.zeros(n_nodes)
    for path, req in zip(paths, requests):
        if path is None:
            continue
        for _, node in path.serving:
            loads[node] += req.bandwidth
    return loads


def node_power(model, topology, deployment, node, assigned_load):
    """Wattage of one node under the given assigned bandwidth load."""
    if assigned_load < 0:
        raise ValueError("assigned_load must be non-negative")
    cap = topology.cpu_capacity[node]
    if cap <= 0:
        raise ValueError(f"node {node} has non-positive cpu_capacity")
    if not topology.is_up(node) or not deployment.node_has_instances(node):
        return 0.0
    ratio = min(1.0, assigned_load / cap)
    return model.p_idle + (model.p_max - model.p_idle) * ratio


def total_power(model, topology, deployment, loads):
    """Total wattage across nodes given per-node assigned loads."""
    return sum(
        node_power(model, topology, deployment, n, float(loads[n]))
        for n in range(topology.n_nodes)
    )
