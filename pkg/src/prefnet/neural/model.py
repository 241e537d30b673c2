"""Preference-conditioned policy/value network.

A gated graph encoder runs T rounds of message passing over the inverse-delay
adjacency for each active request, request encodings are mean-pooled into one
matrix of node states, and each (node, vnf type) pair is scored by
concatenating the node state, a learned type embedding, and the normalized
preference vector. The policy head emits a 3-way distribution per pair
(scale in / keep / scale out); the value head scores the mean-pooled state.

All sizes are taken from the inputs at call time, so one set of weights runs
on any topology size and request count.
"""

import numpy as np

from prefnet.neural import tensor as T
from prefnet.neural.layers import FeedForward, embedding_init, linear_init
from prefnet.neural.tensor import Tensor

N_ACTIONS = 3  # per (node, type): -1 scale in, 0 keep, +1 scale out


class PolicyValueNet:
    def __init__(self, n_types=5, pref_dims=1, hidden=32, steps=3, ff_layers=2,
                 seed=0):
        if pref_dims not in (0, 1, 2):
            raise ValueError("pref_dims must be 0, 1 or 2")
        if steps < 0:
            raise ValueError("steps must be >= 0")
        if hidden < 1 or n_types < 1 or ff_layers < 1:
            raise ValueError("hidden, n_types and ff_layers must be >= 1")
        self.n_types = int(n_types)
        self.pref_dims = int(pref_dims)
        self.hidden = int(hidden)
        self.steps = int(steps)
        self.ff_layers = int(ff_layers)
        self.seed = int(seed)

        d = self.hidden
        in_dim = self.n_types + 2  # instance counts + src/dst indicators
        fused = 2 * d + self.pref_dims
        rng = np.random.default_rng(seed)
        p = {}

        w, b = linear_init(rng, in_dim, d)
        p["enc.w_in"], p["enc.b_in"] = Tensor(w, True), Tensor(b, True)
        w, b = linear_init(rng, d, d)
        p["enc.w_msg"], p["enc.b_msg"] = Tensor(w, True), Tensor(b, True)
        for gate in ("z", "r", "h"):
            w, b = linear_init(rng, d, d)
            u, _ = linear_init(rng, d, d)
            p[f"enc.w_{gate}"] = Tensor(w, True)
            p[f"enc.u_{gate}"] = Tensor(u, True)
            p[f"enc.b_{gate}"] = Tensor(b, True)

        p["emb.types"] = Tensor(embedding_init(rng, self.n_types, d), True)

        ff_dims = [fused] + [2 * d] * ff_layers
        self.policy_ff = FeedForward(rng, p, "policy", ff_dims + [N_ACTIONS])
        self.value_ff = FeedForward(rng, p, "value", ff_dims + [1])

        self.params = p
        self.old_params = {k: v.data.copy() for k, v in p.items()}

    @property
    def config(self):
        return {
            "n_types": self.n_types,
            "pref_dims": self.pref_dims,
            "hidden": self.hidden,
            "steps": self.steps,
            "ff_layers": self.ff_layers,
        }

    # ---- forward pieces ----

    def encode(self, state):
        """Mean request encoding H, shape (n, hidden). Q=0 yields zeros, so a
        tick with no active requests still produces a usable state."""
        p = self.params
        n = state.n_nodes
        if len(state.annotations) == 0:
            return Tensor(np.zeros((n, self.hidden)))
        x = Tensor(np.stack(state.annotations))  # (q, n, in_dim)
        m = Tensor(state.adjacency)
        h = x @ p["enc.w_in"] + p["enc.b_in"]
        for _ in range(self.steps):
            a = m @ (h @ p["enc.w_msg"] + p["enc.b_msg"])
            z = (a @ p["enc.w_z"] + h @ p["enc.u_z"] + p["enc.b_z"]).sigmoid()
            r = (a @ p["enc.w_r"] + h @ p["enc.u_r"] + p["enc.b_r"]).sigmoid()
            cand = (a @ p["enc.w_h"] + (r * h) @ p["enc.u_h"] + p["enc.b_h"]).tanh()
            h = (1.0 - z) * h + z * cand
        return h.mean(axis=0)

    def fuse(self, state):
        """Per-(node, type) rows: [node state | type embedding | preference],
        shape (n * n_types, 2*hidden + pref_dims)."""
        if state.preference.shape != (self.pref_dims,):
            raise ValueError(
                f"state carries {state.preference.shape[0]}-d preference, "
                f"model expects {self.pref_dims}-d")
        h = self.encode(state)
        n = state.n_nodes
        rows_h = T.repeat_interleave(h, self.n_types)
        rows_e = T.tile_rows(self.params["emb.types"], n)
        parts = [rows_h, rows_e]
        if self.pref_dims:
            pref = np.broadcast_to(state.preference, (n * self.n_types, self.pref_dims))
            parts.append(Tensor(pref.copy()))
        return T.concat(parts, axis=1)

    def forward(self, state):
        """(log-probs (n*n_types, 3), value scalar) with graph attached."""
        fused = self.fuse(state)
        logits = self.policy_ff(self.params, fused)
        logp = logits.log_softmax(axis=-1)
        value = self.value_ff(self.params, fused.mean(axis=0, keepdims=True))
        return logp, value.reshape(())

    # ---- inference helpers (plain arrays out) ----

    def policy_probs(self, state):
        """Action distribution, shape (n, n_types, 3); rows sum to 1."""
        logp, _ = self.forward(state)
        n = state.n_nodes
        return np.exp(logp.data).reshape(n, self.n_types, N_ACTIONS)

    def value_of(self, state):
        _, value = self.forward(state)
        return float(value.data)

    # ---- training-time evaluation ----

    def evaluate_actions(self, state, action):
        """Log-prob of a stored joint action, mean per-row entropy, and value,
        all as graph tensors for the surrogate loss."""
        logp, value = self.forward(state)
        action = np.asarray(action)
        n = state.n_nodes
        if action.shape != (n, self.n_types):
            raise ValueError("action shape does not match (n_nodes, n_types)")
        mask = np.zeros((n * self.n_types, N_ACTIONS))
        mask[np.arange(n * self.n_types), action.reshape(-1) + 1] = 1.0
        chosen = (logp * Tensor(mask)).sum()
        probs = logp.exp()
        entropy = -(probs * logp).sum() * (1.0 / (n * self.n_types))
        return chosen, entropy, value

    # ---- parameter plumbing ----

    def state_dict(self):
        return {k: v.data.copy() for k, v in self.params.items()}

    def load_state_dict(self, arrays):
        if set(arrays) != set(self.params):
            raise ValueError("parameter names do not match this architecture")
        for k, v in self.params.items():
            arr = np.asarray(arrays[k], dtype=np.float64)
            if arr.shape != v.data.shape:
                raise ValueError(f"shape mismatch for '{k}'")
            v.data = arr.copy()

    def sync_old(self):
        """Snapshot live weights as the reference policy for the next update."""
        self.old_params = {k: v.data.copy() for k, v in self.params.items()}

    def old_matches_live(self):
        return all(np.array_equal(self.old_params[k], v.data)
                   for k, v in self.params.items())
