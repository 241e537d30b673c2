"""Policy/value network inputs: adjacency, per-request annotations, state bundle.

The adjacency matrix carries inverse edge delays; each request contributes an
annotation matrix of instance counts plus source/destination indicator
columns.  Preferences are normalized by the mean of their sampling
distribution before entering the state, so their expected scale is 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NormalizationUndefined(ValueError):
    """The preference distribution has zero mean, so value/mean is undefined."""


def adjacency(topology):
    """Inverse-delay adjacency matrix; rows and columns of down nodes are zero."""
    n = topology.n_nodes
    m = np.zeros((n, n))
    for i, j, d in topology.edge_list():
        if d <= 0:
            raise ValueError(f"edge ({i},{j}) has non-positive delay")
        if topology.is_up(i) and topology.is_up(j):
            m[i, j] = m[j, i] = 1.0 / d
    return m


def annotate(deployment, request):
    """Per-request node features: instance-count columns then src/dst one-hots."""
    counts = deployment.counts
    n, f = counts.shape
    x = np.zeros((n, f + 2))
    x[:, :f] = counts
    x[request.src, f] = 1.0
    x[request.dst, f + 1] = 1.0
    return x


def normalize_preference(value, dist):
    """Scale a preference by the mean of its distribution (expected value 1)."""
    mean = dist.mean()
    if mean <= 0:
        raise NormalizationUndefined(f"distribution {dist!r} has non-positive mean")
    return value / mean


@dataclass
class SurrogateState:
    """Network state as the policy sees it: (adjacency, annotations, preference)."""

    adjacency: np.ndarray
    annotations: list  # one (n, f+2) matrix per active request
    preference: np.ndarray  # normalized, shape (p,); p may be 0 for static agents

    @property
    def n_nodes(self):
        return self.adjacency.shape[0]


def assemble_state(adj, requests, deployment, preference, dist):
    """Bundle the surrogate state for one step.

    `preference` and `dist` may be scalars/single distributions (1-d
    preference), tuples (2-d), or None/() for agents without a preference
    input.  Preference values are normalized by their distribution means.
    """
    if not requests:
        raise ValueError("state requires at least one active request")
    if preference is None:
        prefs, dists = (), ()
    elif isinstance(preference, (tuple, list)):
        prefs, dists = tuple(preference), tuple(dist)
    else:
        prefs, dists = (preference,), (dist,)
    if len(prefs) != len(dists):
        raise ValueError("one distribution is required per preference dimension")
    normalized = np.array([normalize_preference(v, d) for v, d in zip(prefs, dists)])
    if normalized.size and (not np.isfinite(normalized).all() or (normalized < 0).any()):
        raise ValueError("normalized preference must be finite and non-negative")
    return SurrogateState(
        adjacency=adj,
        annotations=[annotate(deployment, r) for r in requests],
        preference=normalized,
    )
