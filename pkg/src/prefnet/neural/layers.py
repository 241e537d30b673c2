"""Parameter initialization and the small feed-forward stack used by both
policy and value heads."""

import numpy as np

from prefnet.neural.tensor import Tensor


def linear_init(rng, fan_in, fan_out):
    """Weight and bias drawn uniform in +-1/sqrt(fan_in)."""
    bound = 1.0 / np.sqrt(fan_in)
    w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
    b = rng.uniform(-bound, bound, size=(1, fan_out))
    return w, b


def embedding_init(rng, n, dim, std=0.1):
    return rng.normal(0.0, std, size=(n, dim))


class FeedForward:
    """Dense stack with tanh on hidden layers and a linear output layer.
    Parameters are registered into `params` under `prefix`."""

    def __init__(self, rng, params, prefix, dims):
        self.prefix = prefix
        self.n_layers = len(dims) - 1
        for i in range(self.n_layers):
            w, b = linear_init(rng, dims[i], dims[i + 1])
            params[f"{prefix}.w{i}"] = Tensor(w, requires_grad=True)
            params[f"{prefix}.b{i}"] = Tensor(b, requires_grad=True)

    def __call__(self, params, x):
        h = x
        for i in range(self.n_layers):
            h = h @ params[f"{self.prefix}.w{i}"] + params[f"{self.prefix}.b{i}"]
            if i < self.n_layers - 1:
                h = h.tanh()
        return h
