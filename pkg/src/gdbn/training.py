"""Loss terms, the sparsity-regularized objective and the training loop."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import tensor as T
from .datagen import TimeSeriesDataset, WindowBatch, make_windows
from .model import GdbnConfig, GdbnParams, LatentStats, PredictionStats, forward, init_params
from .nn import AdamState, adam_step
from .seeding import stream
from .tensor import Tensor


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    lam: float = 0.01
    epochs: int = 100
    batch_size: int = 64
    n_samples: int = 1
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    patience: int = 10
    min_rel_improvement: float = 1e-4
    standardize: bool = False

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


def kl_loss(stats: LatentStats) -> Tensor:
    """``KL(q || N(0, I)) = -1/2 * sum(1 + logvar - M^2 - exp(logvar))``, summed over all entries."""
    M, lv = stats.mean, stats.logvar
    inner = T.sub(T.sub(T.add(lv, 1.0), T.square(M)), T.exp(lv))
    return T.scalar_mul(T.sum(inner), -0.5)


def recon_loss(x_true, preds: PredictionStats | list[PredictionStats], L: int | None = None) -> Tensor:
    """Monte Carlo negative log-likelihood without the additive constant.

    ``(1/L) * sum_l sum_ij (x - M_l)^2 / (2 Sigma_l) + log Sigma_l`` with
    ``Sigma = exp(logvar)``.
    """
    preds = [preds] if isinstance(preds, PredictionStats) else list(preds)
    L = len(preds) if L is None else L
    if L < 1 or L != len(preds):
        raise ValueError(f"need L >= 1 prediction samples, got L={L} with {len(preds)} samples")
    x = T.constant(np.asarray(x_true, dtype=np.float64).reshape(preds[0].mean.shape))
    total = None
    for p in preds:
        resid = T.square(T.sub(x, p.mean))
        term = T.sum(T.add(T.scalar_mul(T.mul(resid, T.exp(T.scalar_mul(p.logvar, -1.0))), 0.5), p.logvar))
        total = term if total is None else T.add(total, term)
    return T.scalar_mul(total, 1.0 / L)


def l1_penalty(A: Tensor) -> Tensor:
    return T.sum(T.abs(A))


@dataclass
class ObjectiveParts:
    total: float
    recon: float
    kl: float
    l1: float

    @property
    def nelbo(self) -> float:
        return self.recon + self.kl


def total_objective(
    windows,
    params: GdbnParams,
    gcfg: GdbnConfig,
    tcfg: TrainConfig,
    rng: np.random.Generator,
) -> tuple[Tensor, ObjectiveParts]:
    """Mean over windows of the summed per-step (recon + KL), plus ``lam * ||A||_1``."""
    windows = np.asarray(windows, dtype=np.float64)
    B = windows.shape[0]
    if B == 0:
        raise ValueError("empty batch")
    steps = forward(windows, params, gcfg, rng, n_samples=tcfg.n_samples)
    recon = kl = None
    for s in steps:
        r = recon_loss(s.target, s.predictions)
        k = kl_loss(s.latent)
        recon = r if recon is None else T.add(recon, r)
        kl = k if kl is None else T.add(kl, k)
    recon = T.scalar_mul(recon, 1.0 / B)
    kl = T.scalar_mul(kl, 1.0 / B)
    l1 = l1_penalty(params.A)
    loss = T.add(T.add(recon, kl), T.scalar_mul(l1, tcfg.lam))
    return loss, ObjectiveParts(loss.item(), recon.item(), kl.item(), l1.item())


@dataclass
class TrainReport:
    total: list[float] = field(default_factory=list)
    nelbo: list[float] = field(default_factory=list)
    recon: list[float] = field(default_factory=list)
    kl: list[float] = field(default_factory=list)
    l1: list[float] = field(default_factory=list)
    epoch_numbers: list[int] = field(default_factory=list)
    A: np.ndarray | None = None
    seconds: float = 0.0
    epochs_run: int = 0
    stopped_early: bool = False
    kl_collapsed: bool = False
    params: GdbnParams | None = None
    optimizer: AdamState | None = None

    def rows(self) -> list[dict]:
        return [
            {"epoch": e, "total": t, "nelbo": n, "recon": r, "kl": k, "l1": l}
            for e, t, n, r, k, l in zip(self.epoch_numbers, self.total, self.nelbo, self.recon, self.kl, self.l1)
        ]


def _window_array(data, gcfg: GdbnConfig, tcfg: TrainConfig) -> np.ndarray:
    if isinstance(data, WindowBatch):
        if (data.s_o, data.s_p) != (gcfg.s_o, gcfg.s_p):
            raise ValueError(f"windows built for (s_o, s_p)=({data.s_o}, {data.s_p}), model wants ({gcfg.s_o}, {gcfg.s_p})")
        return data.windows
    if isinstance(data, TimeSeriesDataset):
        return make_windows(data, gcfg.s_o, gcfg.s_p, standardize=tcfg.standardize).windows
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 2:
        return make_windows(arr, gcfg.s_o, gcfg.s_p, standardize=tcfg.standardize).windows
    return arr


def train(
    data,
    gcfg: GdbnConfig,
    tcfg: TrainConfig,
    params: GdbnParams | None = None,
    optimizer: AdamState | None = None,
    start_epoch: int = 0,
    callback=None,
) -> TrainReport:
    """Minibatch Adam on every network weight and the TAM.

    ``data`` is a dataset, a ``(T, m)`` series, a :class:`WindowBatch` or a raw
    window array.  Passing ``params``/``optimizer``/``start_epoch`` from an
    earlier report resumes that run with the same random draws it would have
    made uninterrupted (early-stopping bookkeeping restarts).
    """
    windows = _window_array(data, gcfg, tcfg)
    n = windows.shape[0]
    if n == 0:
        raise ValueError("no training windows")
    if params is None:
        params = init_params(gcfg, stream(tcfg.seed, "params"))
    if optimizer is None:
        optimizer = AdamState(lr=tcfg.lr, beta1=tcfg.beta1, beta2=tcfg.beta2, eps=tcfg.eps)
    plist = params.parameters()
    n_batches = -(-n // tcfg.batch_size)

    report = TrainReport(params=params, optimizer=optimizer)
    best = np.inf
    since_best = 0
    t0 = time.perf_counter()
    for epoch in range(start_epoch, tcfg.epochs):
        # per-epoch streams make a resumed run draw exactly what an uninterrupted one would
        order = stream(tcfg.seed, f"shuffle/{epoch}").permutation(n)
        sample_rng = stream(tcfg.seed, f"sampling/{epoch}")
        sums = np.zeros(4)
        for b in range(n_batches):
            idx = order[b * tcfg.batch_size : (b + 1) * tcfg.batch_size]
            try:
                loss, parts = total_objective(windows[idx], params, gcfg, tcfg, sample_rng)
                for p in plist:
                    p.zero_grad()
                loss.backward()
                adam_step(optimizer, plist, [p.grad for p in plist])
            except T.NonFiniteError as exc:
                raise TrainingError(f"non-finite value at epoch {epoch + 1}, batch {b + 1}: {exc}") from exc
            if not np.isfinite(parts.total):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch + 1}, batch {b + 1}: "
                    f"recon={parts.recon} kl={parts.kl} l1={parts.l1}"
                )
            sums += len(idx) * np.array([parts.total, parts.recon, parts.kl, parts.l1])
        total, recon, kl, l1 = sums / n
        report.epoch_numbers.append(epoch + 1)
        report.total.append(float(total))
        report.recon.append(float(recon))
        report.kl.append(float(kl))
        report.nelbo.append(float(recon + kl))
        report.l1.append(float(l1))
        report.epochs_run = epoch + 1
        if callback is not None:
            callback(epoch + 1, report)
        if not np.isfinite(best) or total < best - tcfg.min_rel_improvement * abs(best):
            best = total
            since_best = 0
        else:
            since_best += 1
            if tcfg.patience and since_best >= tcfg.patience:
                report.stopped_early = True
                break
    report.seconds = time.perf_counter() - t0
    report.A = params.tam()
    if report.kl:
        report.kl_collapsed = report.kl[-1] < 1e-3 * max(1.0, abs(report.recon[-1])) and len(report.recon) > 1 and \
            report.recon[-1] >= report.recon[0]
    return report
