import numpy as np
import pytest

from gdbn import tensor as T
from gdbn.model import (
    LOGVAR_CLAMP,
    GdbnConfig,
    LatentStats,
    decode,
    encode,
    forward,
    genc,
    init_params,
    load_checkpoint,
    predict,
    sample_latent,
    save_checkpoint,
)

ACT = {"tanh": np.tanh, "identity": lambda v: v, "relu": lambda v: np.maximum(v, 0), "sin": np.sin}


def np_mlp(net, v):
    v = np.asarray(v, dtype=float)
    for w, b, a in zip(net.weights, net.biases, net.activations):
        v = ACT[a](v @ w.data + b.data)
    return v


def loop_genc(window, params, cfg):
    """Per-target, per-edge sum written with explicit loops (single layer)."""
    layer = params.layers[0]
    B, s_o, m, _ = window.shape
    A = params.A.data
    out = np.zeros((B, m, cfg.hidden))
    for b in range(B):
        for i in range(m):
            acc = np.zeros(cfg.hidden)
            for tau in range(1, s_o + 1):
                h_tau = np_mlp(layer.f_tau, [tau / s_o])
                for j in range(m):
                    x = window[b, s_o - tau, j]
                    msg = np_mlp(layer.f_e, np.concatenate([np_mlp(layer.f_emb, x), h_tau]))
                    acc += A[i, (tau - 1) * m + j] * msg
            out[b, i] = np_mlp(layer.f_v, acc)
    return out


def setup(m=3, s_o=2, s_p=2, d_z=2, hidden=5, seed=0, **kw):
    cfg = GdbnConfig(m=m, s_o=s_o, s_p=s_p, d_z=d_z, hidden=hidden, **kw)
    rng = np.random.default_rng(seed)
    return cfg, init_params(cfg, rng), rng


def test_genc_matches_loop_oracle():
    cfg, params, rng = setup(m=3, s_o=3)
    params.A.data = rng.normal(size=params.A.shape)
    window = rng.normal(size=(2, 3, 3, 1))
    np.testing.assert_allclose(genc(window, params, cfg).data, loop_genc(window, params, cfg), atol=1e-12)


def test_genc_hand_composed_linear_chain():
    # m=1, s_o=1 with identity activations: g = Wv(a * (We [We_x(x) | We_t(1)] + be)) + bv, all affine
    cfg, params, _ = setup(m=1, s_o=1, s_p=1, hidden=2, activation="identity")
    params.A.data[:] = 0.7
    L = params.layers[0]

    def affine(net, v):
        for w, b in zip(net.weights, net.biases):
            v = v @ w.data + b.data
        return v

    x = 1.3
    edge = affine(L.f_e, np.concatenate([affine(L.f_emb, np.array([x])), affine(L.f_tau, np.array([1.0]))]))
    expected = affine(L.f_v, 0.7 * edge)
    np.testing.assert_allclose(genc(np.full((1, 1, 1, 1), x), params, cfg).data[0, 0], expected, atol=1e-13)


def test_zero_tam_gives_identical_rows():
    cfg, params, rng = setup(m=4)
    params.A.data[:] = 0.0
    out = genc(rng.normal(size=(3, cfg.s_o, 4, 1)), params, cfg).data
    fv0 = np_mlp(params.layers[0].f_v, np.zeros(cfg.hidden))
    np.testing.assert_allclose(out, np.broadcast_to(fv0, out.shape), atol=1e-14)


def test_genc_is_permutation_equivariant():
    cfg, params, rng = setup(m=4, s_o=2)
    window = rng.normal(size=(2, 2, 4, 1))
    base = genc(window, params, cfg).data
    perm = rng.permutation(4)
    cube = params.A.data.reshape(4, 2, 4)  # [i, tau, j]
    params.A.data = cube[perm][:, :, perm].reshape(4, 8)
    out = genc(window[:, :, perm], params, cfg).data
    np.testing.assert_allclose(out, base[:, perm], atol=1e-12)


def test_row_depends_only_on_its_tam_row():
    cfg, params, rng = setup(m=3)
    window = rng.normal(size=(2, cfg.s_o, 3, 1))
    base = genc(window, params, cfg).data
    params.A.data[2] += 1.0
    out = genc(window, params, cfg).data
    np.testing.assert_array_equal(out[:, :2], base[:, :2])
    assert not np.allclose(out[:, 2], base[:, 2])


def test_genc_shape_errors():
    cfg, params, _ = setup(m=3, s_o=2)
    with pytest.raises(ValueError):
        genc(np.zeros((1, 3, 3, 1)), params, cfg)


def test_encode_zero_residual():
    # F2 = identity when hidden == d == 1; with x == g the F1 input is zero
    cfg, params, _ = setup(m=2, hidden=1, d_z=1, heads=("mlp", "identity", "mlp", "mlp"))
    g = T.constant(np.array([[[0.4], [-0.2]]]))
    stats = encode(np.array([[0.4, -0.2]]), g, params, cfg)
    f1 = np_mlp(params.heads[0], np.zeros(1))
    np.testing.assert_allclose(stats.mean.data[0], np.tile(f1[:1], (2, 1)), atol=1e-15)


def test_encode_decode_match_scalar_oracle():
    cfg, params, rng = setup(m=3)
    x = rng.normal(size=(2, 3))
    g = rng.normal(size=(2, 3, cfg.hidden))
    z = rng.normal(size=(2, 3, cfg.d_z))
    st = encode(x, T.constant(g), params, cfg)
    pr = decode(T.constant(g), T.constant(z), params, cfg)
    F1, F2, F3, F4 = params.heads
    for b in range(2):
        for i in range(3):
            enc = np_mlp(F1, np_mlp(F2, [x[b, i]]) - g[b, i])
            dec = np_mlp(F3, g[b, i] + np_mlp(F4, z[b, i]))
            np.testing.assert_allclose(st.mean.data[b, i], enc[: cfg.d_z], atol=1e-13)
            np.testing.assert_allclose(st.logvar.data[b, i], np.clip(enc[cfg.d_z :], -8, 8), atol=1e-13)
            np.testing.assert_allclose(pr.mean.data[b, i], dec[:1], atol=1e-13)


def test_logvar_is_clamped():
    cfg, params, _ = setup(m=2)
    params.heads[0].biases[-1].data[cfg.d_z :] = 100.0
    st = encode(np.zeros((1, 2)), T.constant(np.zeros((1, 2, cfg.hidden))), params, cfg)
    np.testing.assert_array_equal(st.logvar.data, LOGVAR_CLAMP)


def test_sample_latent_moments():
    M = np.array([[[1.5, -2.0]]])
    lv = np.array([[[np.log(0.25), np.log(4.0)]]])
    n = 100_000
    stats = LatentStats(T.constant(np.broadcast_to(M, (n, 1, 2)).copy()), T.constant(np.broadcast_to(lv, (n, 1, 2)).copy()))
    z = sample_latent(stats, np.random.default_rng(0)).data
    var = np.exp(lv[0, 0])
    assert np.all(np.abs(z.mean(axis=0)[0] - M[0, 0]) < 5 * np.sqrt(var / n))
    np.testing.assert_allclose(z.var(axis=0)[0], var, rtol=0.02)


def test_sample_latent_gradient_wrt_mean_is_one():
    M = T.tensor(np.zeros((2, 3, 2)), requires_grad=True)
    lv = T.tensor(np.zeros((2, 3, 2)), requires_grad=True)
    z = sample_latent(LatentStats(M, lv), np.random.default_rng(1))
    T.sum(z).backward()
    np.testing.assert_array_equal(M.grad, 1.0)
    # d/dlv of exp(lv/2) eps at lv=0 is eps/2
    np.testing.assert_allclose(lv.grad, (z.data - M.data) / 2, atol=1e-15)


def test_linear_heads_make_prediction_affine_in_z():
    cfg, params, rng = setup(m=2, heads=("linear",) * 4)
    g = T.constant(rng.normal(size=(1, 2, cfg.hidden)))
    z1, z2 = rng.normal(size=(2, 1, 2, cfg.d_z))
    mu = lambda z: decode(g, T.constant(z), params, cfg).mean.data  # noqa: E731
    np.testing.assert_allclose(mu(z1 + z2) + mu(0 * z1), mu(z1) + mu(z2), atol=1e-13)


def test_forward_single_step_uses_observed_window():
    cfg, params, rng = setup(m=2, s_o=3, s_p=1)
    x = rng.normal(size=(2, 4, 2))
    (step,) = forward(x, params, cfg, rng)
    np.testing.assert_array_equal(step.observed.data[..., 0], x[:, :3])
    np.testing.assert_array_equal(step.target[..., 0], x[:, 3])


def test_forward_substitutes_predicted_mean():
    cfg, params, rng = setup(m=2, s_o=3, s_p=2)
    x = rng.normal(size=(2, 5, 2))
    s1, s2 = forward(x, params, cfg, rng)
    np.testing.assert_array_equal(s2.observed.data[:, :2, :, 0], x[:, 1:3])
    np.testing.assert_array_equal(s2.observed.data[:, 2], s1.prediction.mean.data)
    assert not np.allclose(s2.observed.data[:, 2, :, 0], x[:, 3])
    np.testing.assert_array_equal(s2.target[..., 0], x[:, 4])


def test_forward_averages_means_over_samples():
    cfg, params, rng = setup(m=2, s_o=2, s_p=2)
    x = rng.normal(size=(1, 4, 2))
    s1, s2 = forward(x, params, cfg, rng, n_samples=3)
    assert len(s1.predictions) == 3
    avg = np.mean([p.mean.data for p in s1.predictions], axis=0)
    np.testing.assert_allclose(s2.observed.data[:, 1], avg, atol=1e-15)


def test_forward_gradients_reach_tam():
    cfg, params, rng = setup(m=2, s_o=2, s_p=2)
    steps = forward(rng.normal(size=(3, 4, 2)), params, cfg, rng)
    T.sum(steps[-1].prediction.mean).backward()
    assert params.A.grad is not None and np.any(params.A.grad != 0)


def test_checkpoint_round_trip(tmp_path):
    cfg, params, rng = setup(m=3, n_layers=2)
    path = tmp_path / "model.npz"
    save_checkpoint(path, cfg, params, {"epoch": 4})
    cfg2, params2, meta = load_checkpoint(path)
    assert cfg2 == cfg and meta == {"epoch": 4}
    for (n1, p1), (n2, p2) in zip(params.named_parameters(), params2.named_parameters()):
        assert n1 == n2
        np.testing.assert_array_equal(p1.data, p2.data)
    x = rng.normal(size=(2, cfg.s_o + cfg.s_p, 3))
    np.testing.assert_array_equal(predict(x, params, cfg), predict(x, params2, cfg2))


def test_config_validation():
    with pytest.raises(ValueError):
        GdbnConfig(m=0)
    with pytest.raises(ValueError):
        GdbnConfig(m=2, heads=("identity", "mlp", "mlp", "mlp"))
    with pytest.raises(ValueError, match="init"):
        GdbnConfig(m=2, init="zeros")
    assert GdbnConfig.from_dict(GdbnConfig(m=2).to_dict()) == GdbnConfig(m=2)
