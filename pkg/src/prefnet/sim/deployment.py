"""VNF deployment state: instance counts per (node, VNF type)."""
from __future__ import annotations

import numpy as np


class Deployment:
    """Count matrix of shape (n_nodes, n_types); all entries >= 0."""

    def __init__(self, counts):
        arr = np.asarray(counts, dtype=np.int64)
        if arr.ndim != 2:
            raise ValueError("counts must be a 2-d matrix")
        if (arr < 0).any():
            raise ValueError("instance counts must be non-negative")
        self.counts = arr

    @classmethod
    def zeros(cls, n_nodes, n_types):
        return cls(np.zeros((n_nodes, n_types), dtype=np.int64))

    @property
    def shape(self):
        return self.counts.shape

    def copy(self):
        return Deployment(self.counts.copy())

    def instances_of(self, type_index):
        """Network-wide instance count of one VNF type."""
        return int(self.counts[:, type_index].sum())

    def hosts(self, type_index):
        """Node ids holding at least one instance of the type, ascending."""
        return [int(n) for n in np.nonzero(self.counts[:, type_index] > 0)[0]]

    def zero_node(self, node):
        self.counts[node, :] = 0

    def node_has_instances(self, node):
        return bool(self.counts[node, :].any())

    def __eq__(self, other):
        return isinstance(other, Deployment) and np.array_equal(self.counts, other.counts)


def apply_action(deployment, action, topology):
    """Apply a scale matrix with entries in {-1, 0, +1}; counts clamp at 0.

    Down nodes are left untouched (their counts stay 0).  Returns a new
    Deployment; the input is not mutated.
    """
    act = np.asarray(action)
    if act.shape != deployment.counts.shape:
        raise ValueError(f"action shape {act.shape} != deployment shape {deployment.counts.shape}")
    if not np.isin(act, (-1, 0, 1)).all():
        raise ValueError("action entries must be -1, 0 or +1")
    new = deployment.counts + act.astype(np.int64)
    np.maximum(new, 0, out=new)
    for n in range(topology.n_nodes):
        if not topology.is_up(n):
            new[n, :] = 0
    return Deployment(new)


def total_vnf_count(deployment):
    """Total number of deployed instances across all nodes and types."""
    return int(deployment.counts.sum())
