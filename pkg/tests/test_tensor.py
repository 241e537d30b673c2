import numpy as np
import pytest

from prefnet.neural.tensor import Tensor, concat, minimum, repeat_interleave, tile_rows

EPS = 1e-6


def numeric_grad(build, x0):
    """Central finite differences of a scalar-valued function of one array."""
    g = np.zeros_like(x0)
    it = np.nditer(x0, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        up = x0.copy()
        up[idx] += EPS
        dn = x0.copy()
        dn[idx] -= EPS
        g[idx] = (build(up) - build(dn)) / (2 * EPS)
        it.iternext()
    return g


def check_grad(make_loss, x0, rtol=1e-5, atol=1e-7):
    t = Tensor(x0.copy(), requires_grad=True)
    loss = make_loss(t)
    loss.backward()
    analytic = t.grad
    numeric = numeric_grad(lambda arr: float(make_loss(Tensor(arr)).data), x0)
    np.testing.assert_allclose(analytic, numeric, rtol=rtol, atol=atol)


RNG = np.random.default_rng(3)


def test_grad_add_mul_sub_div():
    x0 = RNG.normal(size=(3, 4))
    y = Tensor(RNG.normal(size=(3, 4)) + 3.0)
    check_grad(lambda t: ((t + y) * t - t / y).sum(), x0)


def test_grad_scalar_lift_both_sides():
    x0 = RNG.normal(size=(2, 3))
    check_grad(lambda t: (2.0 * t + 1.0 - t * 0.5).sum(), x0)
    check_grad(lambda t: (1.0 - t).sum(), x0)
    check_grad(lambda t: (6.0 / (t + 10.0)).sum(), x0)


def test_grad_broadcast_row_and_scalar():
    x0 = RNG.normal(size=(1, 4))
    other = Tensor(RNG.normal(size=(3, 4)))
    check_grad(lambda t: (t + other).sum(), x0)
    x1 = RNG.normal(size=(3, 1))
    check_grad(lambda t: (t * other).sum(), x1)


def test_grad_matmul_2d():
    x0 = RNG.normal(size=(3, 4))
    w = Tensor(RNG.normal(size=(4, 2)))
    check_grad(lambda t: (t @ w).sum(), x0)
    w0 = RNG.normal(size=(4, 2))
    x = Tensor(RNG.normal(size=(3, 4)))
    check_grad(lambda t: (x @ t).sum(), w0)


def test_grad_matmul_batched():
    x0 = RNG.normal(size=(5, 3, 4))
    w = Tensor(RNG.normal(size=(4, 2)))
    check_grad(lambda t: (t @ w).sum(), x0)
    # and the broadcast weight side: gradient must sum over the batch
    w0 = RNG.normal(size=(4, 2))
    x = Tensor(RNG.normal(size=(5, 3, 4)))
    check_grad(lambda t: (x @ t).sum(), w0)


def test_grad_elementwise_nonlinearities():
    x0 = RNG.normal(size=(3, 3))
    check_grad(lambda t: t.exp().sum(), x0)
    check_grad(lambda t: (t + 10.0).log().sum(), x0)
    check_grad(lambda t: t.tanh().sum(), x0)
    check_grad(lambda t: t.sigmoid().sum(), x0)
    check_grad(lambda t: (t ** 3.0).sum(), x0)


def test_grad_clip_blocks_boundary():
    x0 = np.array([[-2.0, -0.5, 0.0, 0.5, 2.0]])
    t = Tensor(x0, requires_grad=True)
    t.clip(-1.0, 1.0).sum().backward()
    # only strictly-inside entries pass gradient
    np.testing.assert_array_equal(t.grad, [[0.0, 1.0, 1.0, 1.0, 0.0]])


def test_grad_minimum_prefers_first_on_tie():
    a = Tensor(np.array([1.0, 5.0, 2.0]), requires_grad=True)
    b = Tensor(np.array([1.0, 3.0, 4.0]), requires_grad=True)
    minimum(a, b).sum().backward()
    np.testing.assert_array_equal(a.grad, [1.0, 0.0, 1.0])
    np.testing.assert_array_equal(b.grad, [0.0, 1.0, 0.0])


def test_grad_sum_mean_axes():
    x0 = RNG.normal(size=(4, 3))
    check_grad(lambda t: t.sum(), x0)
    check_grad(lambda t: (t.sum(axis=0) ** 2.0).sum(), x0)
    check_grad(lambda t: (t.mean(axis=1, keepdims=True) * 3.0).sum(), x0)
    check_grad(lambda t: t.mean(), x0)


def test_grad_reshape_concat():
    x0 = RNG.normal(size=(2, 6))
    check_grad(lambda t: (t.reshape((3, 4)) ** 2.0).sum(), x0)
    other = Tensor(RNG.normal(size=(2, 3)))
    check_grad(lambda t: (concat([t, other], axis=1) ** 2.0).sum(), x0)
    check_grad(lambda t: (concat([t, t], axis=0) * 2.0).sum(), x0)


def test_grad_repeat_and_tile():
    x0 = RNG.normal(size=(3, 2))
    check_grad(lambda t: (repeat_interleave(t, 4) ** 2.0).sum(), x0)
    check_grad(lambda t: (tile_rows(t, 4) ** 2.0).sum(), x0)


def test_repeat_tile_layouts():
    t = Tensor(np.array([[1.0, 2.0], [3.0, 4.0]]))
    np.testing.assert_array_equal(
        repeat_interleave(t, 2).data, [[1, 2], [1, 2], [3, 4], [3, 4]])
    np.testing.assert_array_equal(
        tile_rows(t, 2).data, [[1, 2], [3, 4], [1, 2], [3, 4]])


def test_grad_log_softmax():
    x0 = RNG.normal(size=(4, 3)) * 3
    w = Tensor(RNG.normal(size=(4, 3)))
    check_grad(lambda t: (t.log_softmax(axis=1) * w).sum(), x0)
    check_grad(lambda t: (t.log_softmax(axis=0) * w).sum(), x0)


def test_log_softmax_matches_reference():
    x = np.array([[1.0, 2.0, 3.0]])
    out = Tensor(x).log_softmax(axis=1).data
    probs = np.exp(out)
    np.testing.assert_allclose(probs, [[0.09003057, 0.24472847, 0.66524096]], atol=1e-8)
    np.testing.assert_allclose(probs.sum(), 1.0)
    # numerically safe under large offsets
    shifted = Tensor(x + 1000.0).log_softmax(axis=1).data
    np.testing.assert_allclose(shifted, out, atol=1e-9)


def test_grad_composite_expression():
    x0 = RNG.normal(size=(3, 4))
    w = Tensor(RNG.normal(size=(4, 4)))

    def loss(t):
        h = (t @ w).tanh()
        p = h.log_softmax(axis=1)
        return (p * p).mean() + h.sigmoid().sum()

    check_grad(loss, x0, rtol=1e-4)


def test_grad_accumulates_across_reuse():
    x0 = np.array([[2.0, -1.0]])
    t = Tensor(x0, requires_grad=True)
    ((t * t) + t + t).sum().backward()  # d/dx (x^2 + 2x) = 2x + 2
    np.testing.assert_allclose(t.grad, 2 * x0 + 2)


def test_diamond_graph_single_visit():
    # y = a*b + a*c with shared a: toposort must backprop each node once
    a = Tensor(np.array([3.0]), requires_grad=True)
    b = a * 2.0
    c = a * 5.0
    (b * c).sum().backward()  # y = 10 a^2, dy/da = 20 a
    np.testing.assert_allclose(a.grad, [60.0])


def test_deep_chain_no_recursion_limit():
    t = Tensor(np.array([0.5]), requires_grad=True)
    x = t
    for _ in range(5000):
        x = x * 1.0
    x.sum().backward()
    np.testing.assert_allclose(t.grad, [1.0])


def test_backward_requires_scalar():
    t = Tensor(np.ones((2, 2)), requires_grad=True)
    with pytest.raises(ValueError):
        (t * 2.0).backward()


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_raises_at_creation_and_ops():
    with pytest.raises(ValueError):
        Tensor(np.array([np.nan]))
    with pytest.raises(ValueError):
        Tensor(np.array([np.inf]))
    t = Tensor(np.array([1e308]))
    with pytest.raises(ValueError):
        t + t  # overflow to inf must be caught
    z = Tensor(np.array([0.0]))
    with pytest.raises(ValueError):
        z.log()
    with pytest.raises(ValueError):
        Tensor(np.array([1.0])) / z


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_error_names_the_operation():
    t = Tensor(np.array([1e308]))
    with pytest.raises(ValueError, match="mul"):
        t * t


def test_requires_grad_propagation():
    a = Tensor(np.ones((2, 2)), requires_grad=True)
    b = Tensor(np.ones((2, 2)))
    assert (a + b).requires_grad
    assert not (b + b).requires_grad
    out = (b * b).sum()
    out.backward()  # no-grad graph: backward is a no-op for b
    assert b.grad is None


def test_float64_everywhere():
    t = Tensor(np.ones((2, 2), dtype=np.float32))
    assert t.data.dtype == np.float64
    assert (t + t).data.dtype == np.float64


def test_matmul_rejects_vectors():
    with pytest.raises(ValueError):
        Tensor(np.ones(3)) @ Tensor(np.ones((3, 2)))
