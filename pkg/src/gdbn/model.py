"""GDBN network: temporal message passing (GENC), VAE encoder/decoder and the
recurrent multi-step forward pass.

Array conventions: a batch of windows is ``(B, L, m, d)`` with time running
oldest to newest along axis 1.  GENC orders its ``s_o * m`` source slots as
``(tau - 1) * m + j`` so that ``A @ E`` lines up with the TAM block layout.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import tensor as T
from .nn import INIT_SCHEMES, MlpParams, init_mlp, mlp_apply
from .tensor import Tensor

LOGVAR_CLAMP = 8.0
HEAD_KINDS = ("mlp", "linear", "identity")


@dataclass(frozen=True)
class GdbnConfig:
    m: int
    s_o: int = 10
    s_p: int = 3
    d_z: int = 8
    hidden: int = 32
    n_layers: int = 1
    d: int = 1
    activation: str = "tanh"
    # F1..F4: "mlp" (one hidden layer), "linear" (single affine map) or "identity"
    heads: tuple[str, str, str, str] = ("mlp", "mlp", "mlp", "mlp")
    a_init_scale: float = 0.1
    # MLP weight init (nn.init_mlp); fan_in shrinks the signal through the deep GENC path
    init: str = "glorot"

    def __post_init__(self):
        for name in ("m", "s_o", "s_p", "d_z", "hidden", "n_layers", "d"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.init not in INIT_SCHEMES:
            raise ValueError(f"init must be one of {INIT_SCHEMES}, got {self.init!r}")
        object.__setattr__(self, "heads", tuple(self.heads))
        if len(self.heads) != 4 or any(k not in HEAD_KINDS for k in self.heads):
            raise ValueError(f"heads must be four of {HEAD_KINDS}, got {self.heads}")
        h, dz, d = self.hidden, self.d_z, self.d
        # (in, out) of F1..F4
        for k, (din, dout) in enumerate(((h, 2 * dz), (d, h), (h, 2 * d), (dz, h))):
            if self.heads[k] == "identity" and din != dout:
                raise ValueError(f"F{k + 1} cannot be the identity: maps {din} -> {dout}")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["heads"] = list(self.heads)
        return out

    @classmethod
    def from_dict(cls, values: dict) -> "GdbnConfig":
        values = dict(values)
        if "heads" in values:
            values["heads"] = tuple(values["heads"])
        return cls(**values)


@dataclass
class GencLayer:
    f_emb: MlpParams
    f_tau: MlpParams
    f_e: MlpParams
    f_v: MlpParams


@dataclass
class GdbnParams:
    A: Tensor  # (m, s_o * m)
    layers: list[GencLayer]
    heads: list[MlpParams | None]  # F1..F4, None = identity

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        out = [("A", self.A)]
        for li, layer in enumerate(self.layers):
            for net in ("f_emb", "f_tau", "f_e", "f_v"):
                for k, p in enumerate(getattr(layer, net).parameters()):
                    out.append((f"genc{li}.{net}.{k}", p))
        for hi, head in enumerate(self.heads):
            if head is not None:
                for k, p in enumerate(head.parameters()):
                    out.append((f"F{hi + 1}.{k}", p))
        return out

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def tam(self) -> np.ndarray:
        return self.A.data.copy()


@dataclass
class LatentStats:
    mean: Tensor  # (B, m, d_z)
    logvar: Tensor


@dataclass
class PredictionStats:
    mean: Tensor  # (B, m, d)
    logvar: Tensor


@dataclass
class StepOutput:
    target: np.ndarray  # ground truth X^{s_o+i}, (B, m, d)
    observed: Tensor  # observation window fed to GENC, (B, s_o, m, d)
    latent: LatentStats
    z: list[Tensor]
    predictions: list[PredictionStats]  # one per Monte Carlo sample

    @property
    def prediction(self) -> PredictionStats:
        return self.predictions[0]


def _head(kind: str, din: int, dout: int, cfg: GdbnConfig, rng) -> MlpParams | None:
    if kind == "identity":
        return None
    if kind == "linear":
        return init_mlp([din, dout], rng, scheme=cfg.init)
    return init_mlp([din, cfg.hidden, dout], rng, activation=cfg.activation, scheme=cfg.init)


def init_params(cfg: GdbnConfig, rng: np.random.Generator) -> GdbnParams:
    """Fresh parameters; the TAM starts i.i.d. uniform in ``[-a_init_scale, a_init_scale]``."""
    h = cfg.hidden
    A = T.tensor(rng.uniform(-cfg.a_init_scale, cfg.a_init_scale, (cfg.m, cfg.s_o * cfg.m)), requires_grad=True)
    layers = []
    for li in range(cfg.n_layers):
        d_in = cfg.d if li == 0 else h
        mk = lambda a, b: init_mlp([a, h, b], rng, activation=cfg.activation, scheme=cfg.init)  # noqa: E731
        layers.append(GencLayer(f_emb=mk(d_in, h), f_tau=mk(1, h), f_e=mk(2 * h, h), f_v=mk(h, h)))
    dims = ((h, 2 * cfg.d_z), (cfg.d, h), (h, 2 * cfg.d), (cfg.d_z, h))
    heads = [_head(kind, a, b, cfg, rng) for kind, (a, b) in zip(cfg.heads, dims)]
    return GdbnParams(A, layers, heads)


def _apply_head(head: MlpParams | None, x: Tensor) -> Tensor:
    return x if head is None else mlp_apply(head, x)


def _as_4d(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x[..., None] if x.ndim == 3 else x


def lag_features(s_o: int) -> np.ndarray:
    """Scalar lag feature ``tau / s_o`` for ``tau = 1..s_o``, shape ``(s_o, 1)``."""
    return (np.arange(1, s_o + 1, dtype=np.float64) / s_o)[:, None]


def genc(window, params: GdbnParams, cfg: GdbnConfig) -> Tensor:
    """Target-slice node embeddings ``(B, m, hidden)`` from an observation window.

    ``window`` is ``(B, s_o, m, d)``, oldest step first.  Source slot
    ``(j, tau)`` holds ``x_j^{t - tau}``; its edge message
    ``f_e([f_emb(x_j^{t-tau}) | f_tau(tau)])`` reaches target ``i`` scaled by
    ``a_ij^tau``, and ``f_v`` maps the summed messages to the embedding.
    """
    window = window if isinstance(window, Tensor) else T.constant(_as_4d(window))
    B, s_o, m, d = window.shape
    if (s_o, m, d) != (cfg.s_o, cfg.m, cfg.d):
        raise ValueError(f"window shape {window.shape} does not match (B, {cfg.s_o}, {cfg.m}, {cfg.d})")
    if params.A.shape != (cfg.m, cfg.s_o * cfg.m):
        raise ValueError(f"TAM shape {params.A.shape} does not match ({cfg.m}, {cfg.s_o * cfg.m})")
    S = s_o * m
    state = window[:, ::-1].reshape(B, S, d)
    tau_in = T.constant(np.repeat(lag_features(s_o), m, axis=0))  # (S, 1)
    for li, layer in enumerate(params.layers):
        h_node = mlp_apply(layer.f_emb, state)
        h_tau = T.broadcast_to(mlp_apply(layer.f_tau, tau_in), h_node.shape)
        edge = mlp_apply(layer.f_e, T.concat([h_node, h_tau], axis=-1))
        if li == len(params.layers) - 1:
            return mlp_apply(layer.f_v, T.matmul(params.A, edge))
        state = mlp_apply(layer.f_v, edge)
    raise AssertionError("unreachable")


def encode(x_t, g: Tensor, params: GdbnParams, cfg: GdbnConfig) -> LatentStats:
    """``[M_Z | logvar_Z] = F1(F2(x_t) - g)`` where ``g`` is the GENC embedding."""
    x_t = x_t if isinstance(x_t, Tensor) else T.constant(np.asarray(x_t, dtype=np.float64))
    if x_t.ndim == 2:
        x_t = x_t.reshape(x_t.shape[0], x_t.shape[1], 1)
    f2 = _apply_head(params.heads[1], x_t)
    if f2.shape != g.shape:
        raise ValueError(f"F2 output {f2.shape} does not match GENC output {g.shape}")
    out = _apply_head(params.heads[0], T.sub(f2, g))
    dz = cfg.d_z
    return LatentStats(out[..., :dz], T.clip(out[..., dz:], -LOGVAR_CLAMP, LOGVAR_CLAMP))


def sample_latent(stats: LatentStats, rng: np.random.Generator) -> Tensor:
    """Reparameterized draw ``Z = M + exp(logvar / 2) * eps``."""
    eps = rng.standard_normal(stats.mean.shape)
    return T.add(stats.mean, T.mul(T.exp(T.scalar_mul(stats.logvar, 0.5)), eps))


def decode(g: Tensor, z: Tensor, params: GdbnParams, cfg: GdbnConfig) -> PredictionStats:
    """``[M_X | logvar_X] = F3(g + F4(z))``."""
    out = _apply_head(params.heads[2], T.add(g, _apply_head(params.heads[3], z)))
    d = cfg.d
    return PredictionStats(out[..., :d], T.clip(out[..., d:], -LOGVAR_CLAMP, LOGVAR_CLAMP))


def forward(
    windows,
    params: GdbnParams,
    cfg: GdbnConfig,
    rng: np.random.Generator,
    n_samples: int = 1,
) -> list[StepOutput]:
    """Recurrent prediction of the last ``s_p`` steps of each window.

    Step ``i`` encodes the true ``X^{s_o+i}`` against the current observation
    window, samples ``Z``, decodes, then substitutes the predicted mean for
    ``X^{s_o+i}`` before the window rolls forward.  With ``n_samples > 1`` the
    substituted value is the average of the per-sample means.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    x = _as_4d(windows)
    if x.ndim != 4 or x.shape[1] != cfg.s_o + cfg.s_p:
        raise ValueError(f"expected windows of length {cfg.s_o + cfg.s_p}, got shape {x.shape}")
    slots: list[Tensor] = [T.constant(x[:, t]) for t in range(x.shape[1])]
    steps = []
    for i in range(cfg.s_p):
        observed = T.stack(slots[i : i + cfg.s_o], axis=1)
        g = genc(observed, params, cfg)
        target = x[:, cfg.s_o + i]
        latent = encode(target, g, params, cfg)
        zs = [sample_latent(latent, rng) for _ in range(n_samples)]
        preds = [decode(g, z, params, cfg) for z in zs]
        if n_samples == 1:
            slots[cfg.s_o + i] = preds[0].mean
        else:
            slots[cfg.s_o + i] = T.scalar_mul(T.sum(T.stack([p.mean for p in preds]), 0), 1.0 / n_samples)
        steps.append(StepOutput(target, observed, latent, zs, preds))
    return steps


def predict(windows, params: GdbnParams, cfg: GdbnConfig, rng=None) -> np.ndarray:
    """Predicted means ``(B, s_p, m, d)`` for each window (Z sampled as in training)."""
    rng = np.random.default_rng(0) if rng is None else rng
    steps = forward(windows, params, cfg, rng)
    return np.stack([s.prediction.mean.data for s in steps], axis=1)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def save_checkpoint(path, cfg: GdbnConfig, params: GdbnParams, meta: dict | None = None) -> None:
    """Single ``.npz`` holding the config (JSON), metadata and every named tensor."""
    arrays = {f"param:{name}": p.data for name, p in params.named_parameters()}
    header = json.dumps({"config": cfg.to_dict(), "meta": meta or {}}, sort_keys=True)
    with open(path, "wb") as fh:
        np.savez(fh, __header__=np.array(header), **arrays)


def load_checkpoint(path) -> tuple[GdbnConfig, GdbnParams, dict]:
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["__header__"]))
        cfg = GdbnConfig.from_dict(header["config"])
        params = init_params(cfg, np.random.default_rng(0))
        named = dict(params.named_parameters())
        stored = {k[len("param:"):] for k in data.files if k.startswith("param:")}
        if stored != set(named):
            raise ValueError(f"checkpoint parameters do not match config: {sorted(stored ^ set(named))}")
        for name, p in named.items():
            arr = data[f"param:{name}"]
            if arr.shape != p.shape:
                raise ValueError(f"checkpoint tensor {name} has shape {arr.shape}, expected {p.shape}")
            p.data = np.array(arr, dtype=np.float64)
    return cfg, params, header["meta"]
