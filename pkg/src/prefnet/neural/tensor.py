"""Reverse-mode autodiff over numpy float64 arrays.

Every operation checks its output for NaN/inf and raises ValueError on the
first non-finite value, so a diverging computation fails at the op that
produced it instead of surfacing later as a corrupted update.
"""

import numpy as np


def _as_array(x):
    a = np.asarray(x, dtype=np.float64)
    return a


def _check_finite(a, op):
    if not np.all(np.isfinite(a)):
        raise ValueError(f"non-finite value produced by '{op}'")
    return a


def _unbroadcast(grad, shape):
    # reduce a broadcasted gradient back to the original operand shape
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for i, n in enumerate(shape):
        if n == 1 and grad.shape[i] != 1:
            grad = grad.sum(axis=i, keepdims=True)
    return grad


class Tensor:
    """Node in the computation graph. Leaves with requires_grad=True
    accumulate into .grad on backward()."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_op")

    def __init__(self, data, requires_grad=False, _parents=(), _op="leaf"):
        self.data = _check_finite(_as_array(data), _op)
        self.grad = None
        self.requires_grad = bool(requires_grad) or any(p.requires_grad for p in _parents)
        self._parents = _parents
        self._backward = None
        self._op = _op

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data)

    def detach(self):
        return Tensor(self.data.copy())

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, op={self._op}, grad={self.requires_grad})"

    # ---- graph construction helpers ----

    @staticmethod
    def _lift(x):
        return x if isinstance(x, Tensor) else Tensor(x)

    def _make(self, data, parents, op, backward):
        out = Tensor(data, _parents=parents, _op=op)
        if out.requires_grad:
            out._backward = backward
        return out

    # ---- arithmetic ----

    def __add__(self, other):
        other = self._lift(other)

        def backward(g, out):
            if self.requires_grad:
                self._accum(_unbroadcast(g, self.data.shape))
            if other.requires_grad:
                other._accum(_unbroadcast(g, other.data.shape))

        return self._make(self.data + other.data, (self, other), "add", backward)

    __radd__ = __add__

    def __neg__(self):
        def backward(g, out):
            if self.requires_grad:
                self._accum(-g)

        return self._make(-self.data, (self,), "neg", backward)

    def __sub__(self, other):
        other = self._lift(other)

        def backward(g, out):
            if self.requires_grad:
                self._accum(_unbroadcast(g, self.data.shape))
            if other.requires_grad:
                other._accum(_unbroadcast(-g, other.data.shape))

        return self._make(self.data - other.data, (self, other), "sub", backward)

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)

        def backward(g, out):
            if self.requires_grad:
                self._accum(_unbroadcast(g * other.data, self.data.shape))
            if other.requires_grad:
                other._accum(_unbroadcast(g * self.data, other.data.shape))

        return self._make(self.data * other.data, (self, other), "mul", backward)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._lift(other)

        def backward(g, out):
            if self.requires_grad:
                self._accum(_unbroadcast(g / other.data, self.data.shape))
            if other.requires_grad:
                other._accum(_unbroadcast(-g * self.data / (other.data * other.data),
                                          other.data.shape))

        return self._make(self.data / other.data, (self, other), "div", backward)

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def __pow__(self, exponent):
        e = float(exponent)

        def backward(g, out):
            if self.requires_grad:
                self._accum(g * e * self.data ** (e - 1.0))

        return self._make(self.data ** e, (self,), "pow", backward)

    def __matmul__(self, other):
        """Matrix product; operands must be >= 2-d. Leading batch dims follow
        numpy broadcasting and gradients are reduced back accordingly."""
        other = self._lift(other)
        if self.data.ndim < 2 or other.data.ndim < 2:
            raise ValueError("matmul operands must be at least 2-d")

        def backward(g, out):
            if self.requires_grad:
                self._accum(_unbroadcast(g @ other.data.swapaxes(-1, -2),
                                         self.data.shape))
            if other.requires_grad:
                other._accum(_unbroadcast(self.data.swapaxes(-1, -2) @ g,
                                          other.data.shape))

        return self._make(self.data @ other.data, (self, other), "matmul", backward)

    # ---- elementwise nonlinearities ----

    def exp(self):
        def backward(g, out):
            if self.requires_grad:
                self._accum(g * out.data)

        return self._make(np.exp(self.data), (self,), "exp", backward)

    def log(self):
        def backward(g, out):
            if self.requires_grad:
                self._accum(g / self.data)

        return self._make(np.log(self.data), (self,), "log", backward)

    def tanh(self):
        def backward(g, out):
            if self.requires_grad:
                self._accum(g * (1.0 - out.data * out.data))

        return self._make(np.tanh(self.data), (self,), "tanh", backward)

    def sigmoid(self):
        data = 1.0 / (1.0 + np.exp(-self.data))

        def backward(g, out):
            if self.requires_grad:
                self._accum(g * out.data * (1.0 - out.data))

        return self._make(data, (self,), "sigmoid", backward)

    def clip(self, lo, hi):
        # gradient passes through only where the input sits strictly inside
        mask = (self.data > lo) & (self.data < hi)

        def backward(g, out):
            if self.requires_grad:
                self._accum(g * mask)

        return self._make(np.clip(self.data, lo, hi), (self,), "clip", backward)

    # ---- reductions and shape ----

    def sum(self, axis=None, keepdims=False):
        def backward(g, out):
            if not self.requires_grad:
                return
            if axis is None:
                self._accum(np.broadcast_to(g, self.data.shape).copy())
            else:
                gg = g if keepdims else np.expand_dims(g, axis)
                self._accum(np.broadcast_to(gg, self.data.shape).copy())

        return self._make(self.data.sum(axis=axis, keepdims=keepdims),
                          (self,), "sum", backward)

    def mean(self, axis=None, keepdims=False):
        n = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        old = self.data.shape

        def backward(g, out):
            if self.requires_grad:
                self._accum(g.reshape(old))

        return self._make(self.data.reshape(shape), (self,), "reshape", backward)

    def log_softmax(self, axis=-1):
        # max is treated as a constant shift; exact gradient either way
        shifted = self.data - self.data.max(axis=axis, keepdims=True)
        lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
        data = shifted - lse

        def backward(g, out):
            if self.requires_grad:
                softmax = np.exp(out.data)
                self._accum(g - softmax * g.sum(axis=axis, keepdims=True))

        return self._make(data, (self,), "log_softmax", backward)

    # ---- backward ----

    def _accum(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self):
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar output")
        order = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None:
                _check_finite(node.grad, f"backward:{node._op}")
                node._backward(node.grad, node)


def concat(tensors, axis=1):
    """Concatenate along an axis; gradients split back by segment."""
    tensors = [Tensor._lift(t) for t in tensors]
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g, out):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                t._accum(g[tuple(idx)])

    data = np.concatenate([t.data for t in tensors], axis=axis)
    out = Tensor(data, _parents=tuple(tensors), _op="concat")
    if out.requires_grad:
        out._backward = backward
    return out


def repeat_interleave(t, repeats, axis=0):
    """Each row repeated `repeats` times in place: [a, b] -> [a, a, b, b]."""
    if axis != 0:
        raise ValueError("only axis=0 is supported")
    t = Tensor._lift(t)
    n = t.data.shape[0]

    def backward(g, out):
        if t.requires_grad:
            t._accum(g.reshape(n, repeats, *t.data.shape[1:]).sum(axis=1))

    out = Tensor(np.repeat(t.data, repeats, axis=0), _parents=(t,), _op="repeat")
    if out.requires_grad:
        out._backward = backward
    return out


def tile_rows(t, reps):
    """Whole block repeated `reps` times: [a, b] -> [a, b, a, b]."""
    t = Tensor._lift(t)
    n = t.data.shape[0]

    def backward(g, out):
        if t.requires_grad:
            t._accum(g.reshape(reps, n, *t.data.shape[1:]).sum(axis=0))

    out = Tensor(np.tile(t.data, (reps,) + (1,) * (t.data.ndim - 1)),
                 _parents=(t,), _op="tile")
    if out.requires_grad:
        out._backward = backward
    return out


def minimum(a, b):
    """Elementwise min; ties route the gradient to the first argument."""
    a = Tensor._lift(a)
    b = Tensor._lift(b)
    take_a = a.data <= b.data

    def backward(g, out):
        if a.requires_grad:
            a._accum(_unbroadcast(g * take_a, a.data.shape))
        if b.requires_grad:
            b._accum(_unbroadcast(g * ~take_a, b.data.shape))

    out = Tensor(np.minimum(a.data, b.data), _parents=(a, b), _op="minimum")
    if out.requires_grad:
        out._backward = backward
    return out
