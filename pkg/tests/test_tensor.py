import math
import numpy as np
import pytest

from gdbn import tensor as T
from gdbn.nn import AdamState, MlpParams, adam_step, finite_difference_check, init_mlp, mlp_apply


def fd_grad(fn, x, h=1e-5):
    """Central differences of a scalar numpy function."""
    g = np.zeros_like(x)
    for k in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[k] += h
        xm[k] -= h
        g[k] = (fn(xp) - fn(xm)) / (2 * h)
    return g


def test_matmul_hand_product():
    out = T.matmul(T.tensor([[1.0, 2.0], [3.0, 4.0]]), T.tensor([[1.0], [1.0]]))
    np.testing.assert_array_equal(out.data, [[3.0], [7.0]])


def test_sin_of_zero_is_zero():
    np.testing.assert_array_equal(T.sin(T.tensor(np.zeros((2, 3)))).data, np.zeros((2, 3)))


def test_sum_gradient_is_ones():
    x = T.tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
    T.sum(x).backward()
    np.testing.assert_array_equal(x.grad, np.ones((2, 3)))


def test_square_sum_gradient():
    x = T.tensor([1.0, 2.0, 3.0], requires_grad=True)
    T.sum(T.square(x)).backward()
    np.testing.assert_array_equal(x.grad, [2.0, 4.0, 6.0])


def test_sin_gradient_at_zero():
    x = T.tensor([0.0], requires_grad=True)
    T.sum(T.sin(x)).backward()
    np.testing.assert_array_equal(x.grad, [1.0])


def test_backward_requires_scalar_root():
    x = T.tensor([1.0, 2.0], requires_grad=True)
    with pytest.raises(ValueError, match="scalar"):
        T.square(x).backward()


def test_shape_mismatch_raises():
    with pytest.raises(ValueError, match="matmul"):
        T.matmul(T.tensor(np.ones((2, 3))), T.tensor(np.ones((2, 3))))
    with pytest.raises(ValueError, match="add"):
        T.add(T.tensor(np.ones((2, 3))), T.tensor(np.ones((4,))))


def test_non_finite_result_raises():
    with pytest.raises(T.NonFiniteError):
        T.exp(T.tensor([1000.0]))
    with pytest.raises(T.NonFiniteError):
        T.log(T.tensor([0.0]))


def test_shared_node_gradients_accumulate():
    x = T.tensor([1.5, -0.5], requires_grad=True)
    y = T.mul(x, x)  # x used twice
    T.sum(T.add(y, x)).backward()
    np.testing.assert_allclose(x.grad, 2 * x.data + 1)


UNARY = {
    "sin": (T.sin, np.sin),
    "cos": (T.cos, np.cos),
    "tanh": (T.tanh, np.tanh),
    "exp": (T.exp, np.exp),
    "square": (T.square, np.square),
}


@pytest.mark.parametrize("name", sorted(UNARY))
def test_unary_primitives_match_finite_differences(name):
    op, ref = UNARY[name]
    rng = np.random.default_rng(3)
    x0 = rng.uniform(-2, 2, (3, 4))
    w = rng.normal(size=(3, 4))
    x = T.tensor(x0, requires_grad=True)
    T.sum(T.mul(op(x), w)).backward()
    expected = fd_grad(lambda v: np.sum(ref(v) * w), x0)
    np.testing.assert_allclose(x.grad, expected, rtol=1e-4, atol=1e-8)


def test_log_matches_finite_differences():
    x0 = np.random.default_rng(0).uniform(0.5, 2.0, 5)
    x = T.tensor(x0, requires_grad=True)
    T.sum(T.log(x)).backward()
    np.testing.assert_allclose(x.grad, fd_grad(lambda v: np.log(v).sum(), x0), rtol=1e-4)


BINARY = {
    "add": (T.add, np.add),
    "sub": (T.sub, np.subtract),
    "mul": (T.mul, np.multiply),
}


@pytest.mark.parametrize("name", sorted(BINARY))
@pytest.mark.parametrize("shapes", [((3, 4), (3, 4)), ((2, 3, 4), (4,)), ((3, 1), (1, 4))])
def test_broadcasting_binary_gradients(name, shapes):
    op, ref = BINARY[name]
    rng = np.random.default_rng(1)
    a0, b0 = rng.uniform(-2, 2, shapes[0]), rng.uniform(-2, 2, shapes[1])
    w = rng.normal(size=np.broadcast_shapes(*shapes))
    a, b = T.tensor(a0, requires_grad=True), T.tensor(b0, requires_grad=True)
    T.sum(T.mul(op(a, b), w)).backward()
    np.testing.assert_allclose(a.grad, fd_grad(lambda v: np.sum(ref(v, b0) * w), a0), rtol=1e-4, atol=1e-8)
    np.testing.assert_allclose(b.grad, fd_grad(lambda v: np.sum(ref(a0, v) * w), b0), rtol=1e-4, atol=1e-8)


def test_batched_matmul_gradients():
    rng = np.random.default_rng(2)
    a0, b0 = rng.uniform(-2, 2, (3, 5)), rng.uniform(-2, 2, (4, 5, 2))
    a, b = T.tensor(a0, requires_grad=True), T.tensor(b0, requires_grad=True)
    T.sum(T.square(T.matmul(a, b))).backward()
    np.testing.assert_allclose(a.grad, fd_grad(lambda v: np.sum((v @ b0) ** 2), a0), rtol=1e-4)
    np.testing.assert_allclose(b.grad, fd_grad(lambda v: np.sum((a0 @ v) ** 2), b0), rtol=1e-4)


def test_shape_ops_gradients():
    rng = np.random.default_rng(4)
    x0 = rng.uniform(-2, 2, (2, 3, 4))
    w = rng.normal(size=(2, 4, 3, 2))

    def ref(v):
        cat = np.concatenate([v[:, ::-1], v[:, :1]], axis=1)  # (2, 4, 4)
        st = np.stack([cat[..., :3], np.tanh(cat[..., 1:])], axis=-1)
        return np.sum(st * w)

    x = T.tensor(x0, requires_grad=True)
    cat = T.concat([x[:, ::-1], x[:, :1]], axis=1)
    st = T.stack([cat[..., :3], T.tanh(cat[..., 1:])], axis=-1)
    T.sum(T.mul(st, w)).backward()
    np.testing.assert_allclose(x.grad, fd_grad(ref, x0), rtol=1e-4, atol=1e-8)


def test_reductions_reshape_broadcast_gradients():
    rng = np.random.default_rng(5)
    x0 = rng.uniform(-2, 2, (3, 4))
    x = T.tensor(x0, requires_grad=True)
    y = T.mean(T.broadcast_to(T.reshape(T.sum(x, axis=1), (3, 1)), (3, 5)), axis=0)
    T.sum(T.square(y)).backward()
    ref = lambda v: np.sum(np.mean(np.broadcast_to(v.sum(1)[:, None], (3, 5)), axis=0) ** 2)  # noqa: E731
    np.testing.assert_allclose(x.grad, fd_grad(ref, x0), rtol=1e-4)


def test_abs_and_clip_subgradients():
    x = T.tensor([-1.5, 0.0, 2.0], requires_grad=True)
    T.sum(T.abs(x)).backward()
    np.testing.assert_array_equal(x.grad, [-1.0, 0.0, 1.0])
    y = T.tensor([-3.0, 0.5, 3.0], requires_grad=True)
    T.sum(T.clip(y, -1, 1)).backward()
    np.testing.assert_array_equal(y.grad, [0.0, 1.0, 0.0])


def test_forward_is_repeatable_after_backward():
    rng = np.random.default_rng(0)
    mlp = init_mlp([3, 5, 2], rng)
    x = T.constant(rng.normal(size=(4, 3)))
    first = mlp_apply(mlp, x)
    T.sum(first).backward()
    second = mlp_apply(mlp, x)
    np.testing.assert_array_equal(first.data, second.data)


# ---------------------------------------------------------------------------
# MLP
# ---------------------------------------------------------------------------

def test_identity_linear_layer_is_identity():
    mlp = MlpParams([T.tensor(np.eye(3))], [T.tensor(np.zeros(3))], ["identity"])
    x = T.constant(np.random.default_rng(0).normal(size=(5, 3)))
    np.testing.assert_array_equal(mlp_apply(mlp, x).data, x.data)


def test_zero_weight_layer_outputs_bias():
    mlp = MlpParams([T.tensor(np.zeros((3, 2)))], [T.tensor([0.5, -1.0])], ["identity"])
    out = mlp_apply(mlp, T.constant(np.ones((4, 3))))
    np.testing.assert_array_equal(out.data, np.tile([0.5, -1.0], (4, 1)))


def test_two_layer_mlp_matches_scalar_loops():
    rng = np.random.default_rng(11)
    mlp = init_mlp([3, 4, 2], rng, activation="tanh")
    x = rng.normal(size=(5, 3))
    out = mlp_apply(mlp, T.constant(x)).data
    W1, b1, W2, b2 = (p.data for p in mlp.parameters())
    expected = np.zeros((5, 2))
    for n in range(5):
        hidden = []
        for k in range(4):
            s = b1[k]
            for i in range(3):
                s += x[n, i] * W1[i, k]
            hidden.append(np.tanh(s))
        for o in range(2):
            s = b2[o]
            for k in range(4):
                s += hidden[k] * W2[k, o]
            expected[n, o] = s
    np.testing.assert_allclose(out, expected, rtol=1e-13, atol=1e-14)


def test_mlp_dimension_checks():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError, match="expects last dim"):
        mlp_apply(init_mlp([3, 2], rng), T.constant(np.ones((1, 4))))
    with pytest.raises(ValueError, match="previous output"):
        MlpParams([T.tensor(np.ones((3, 2))), T.tensor(np.ones((3, 1)))],
                  [T.tensor(np.ones(2)), T.tensor(np.ones(1))], ["tanh", "identity"])


def test_init_bounds():
    mlp = init_mlp([16, 4], np.random.default_rng(0))
    assert np.all(np.abs(mlp.weights[0].data) <= 0.25)


def test_glorot_init_bounds_and_variance():
    mlp = init_mlp([300, 100], np.random.default_rng(0), scheme="glorot")
    w = mlp.weights[0].data
    # U(-b, b) with b = sqrt(6 / 400) has variance b^2 / 3 = 2 / 400
    assert np.all(np.abs(w) <= math.sqrt(6 / 400))
    assert w.var() == pytest.approx(2 / 400, rel=0.02)
    np.testing.assert_array_equal(mlp.biases[0].data, 0.0)
    with pytest.raises(ValueError, match="init scheme"):
        init_mlp([2, 2], np.random.default_rng(0), scheme="he")


def test_glorot_keeps_tanh_signal_alive_through_depth():
    # spread of outputs across inputs after six tanh layers, both schemes
    rng = np.random.default_rng(3)
    x = T.constant(rng.normal(size=(2000, 32)))
    spread = {}
    for scheme in ("fan_in", "glorot"):
        mlp = init_mlp([32] * 7, np.random.default_rng(1), scheme=scheme)
        spread[scheme] = mlp_apply(mlp, x).data.std(axis=0).mean()
    assert spread["glorot"] > 5 * spread["fan_in"]


def test_three_layer_mlp_matches_finite_differences():
    rng = np.random.default_rng(7)
    mlp = init_mlp([3, 6, 5, 1], rng)
    x = T.constant(rng.uniform(-2, 2, (8, 3)))
    report = finite_difference_check(lambda: T.sum(T.sin(mlp_apply(mlp, x))), mlp.parameters())
    assert report.max_error < 1e-4, report.errors


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

def test_adam_zero_gradient_is_fixed_point():
    p = T.tensor([1.0, -2.0], requires_grad=True)
    state = AdamState(lr=0.1)
    for _ in range(5):
        adam_step(state, [p], [np.zeros(2)])
    np.testing.assert_array_equal(p.data, [1.0, -2.0])


def test_adam_first_step_closed_form():
    # m_hat = g, v_hat = g^2 after bias correction, so the update is lr * g / (|g| + eps)
    p = T.tensor([0.0], requires_grad=True)
    adam_step(AdamState(lr=0.1), [p], [np.array([1.0])])
    np.testing.assert_allclose(p.data, [-0.1 / (1 + 1e-8)], rtol=1e-12)


def test_adam_step_counter():
    p = T.tensor([0.0], requires_grad=True)
    state = AdamState()
    assert state.step == 0
    adam_step(state, [p], [np.ones(1)])
    adam_step(state, [p], [np.ones(1)])
    assert state.step == 2


def test_adam_rejects_nan_gradient():
    p = T.tensor([0.0], requires_grad=True)
    with pytest.raises(T.NonFiniteError):
        adam_step(AdamState(), [p], [np.array([np.nan])])


# ---------------------------------------------------------------------------
# finite-difference checker
# ---------------------------------------------------------------------------

def test_gradcheck_quadratic_is_exact():
    p = T.tensor(np.random.default_rng(0).normal(size=(3, 2)), requires_grad=True)
    c = np.random.default_rng(1).normal(size=(3, 2))
    report = finite_difference_check(lambda: T.sum(T.square(T.sub(p, c))), [p])
    assert report.max_error < 1e-8


def test_gradcheck_unused_parameter_has_zero_gradient():
    used = T.tensor([1.0, 2.0], requires_grad=True)
    unused = T.tensor([3.0], requires_grad=True)
    unused.zero_grad()
    T.sum(T.square(used)).backward()
    assert unused.grad is None
    report = finite_difference_check(lambda: T.sum(T.square(used)), [used, unused])
    assert report.errors[1] == 0.0
