"""Action selection from per-(node, type) 3-way distributions."""

import numpy as np

_ROW_TOL = 1e-6


def _validate_probs(probs):
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 3 or probs.shape[-1] != 3:
        raise ValueError("probabilities must have shape (n_nodes, n_types, 3)")
    if np.any(probs < 0.0) or not np.all(np.isfinite(probs)):
        raise ValueError("probabilities must be finite and non-negative")
    sums = probs.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > _ROW_TOL):
        raise ValueError("probability rows must sum to 1")
    return probs


def sample_action(probs, rng):
    """Draw one class per (node, type) row; returns the action matrix with
    entries in {-1, 0, +1} and the joint log-probability (sum over rows)."""
    probs = _validate_probs(probs)
    n, f, _ = probs.shape
    cum = probs.cumsum(axis=-1)
    u = rng.random(size=(n, f, 1))
    idx = np.minimum((u > cum).sum(axis=-1), 2)
    chosen = np.take_along_axis(probs, idx[..., None], axis=-1)[..., 0]
    logp = float(np.log(np.maximum(chosen, 1e-300)).sum())
    return (idx - 1).astype(np.int64), logp


def greedy_action(probs):
    """Argmax per row; ties resolve to the lowest class index (scale in)."""
    probs = _validate_probs(probs)
    return (probs.argmax(axis=-1) - 1).astype(np.int64)


def action_log_prob(probs, action):
    """Joint log-probability the rows assign to a given action matrix."""
    probs = _validate_probs(probs)
    action = np.asarray(action)
    if action.shape != probs.shape[:2]:
        raise ValueError("action shape does not match probability rows")
    if not np.isin(action, (-1, 0, 1)).all():
        raise ValueError("action entries must be -1, 0 or +1")
    idx = (action + 1)[..., None]
    chosen = np.take_along_axis(probs, idx, axis=-1)[..., 0]
    return float(np.log(np.maximum(chosen, 1e-300)).sum())
