"""Graph-recovery scoring and the multi-seed benchmark runner.

The candidate universe is every lagged edge the model can express:
``(j, i, tau)`` for all ordered pairs (self loops included) and
``tau = 1..s_o``.  Ground truth only has edges up to its own maximum lag
``p <= s_o``; false positives are split into those within that lag range and
those beyond it.
"""
from __future__ import annotations

import math
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import rankdata

from .graph import CausalTemporalGraph, TemporalAdjacencyMatrix, threshold

DEFAULT_OMEGA = 0.3
METRICS = ("fdr", "tpr", "f1", "shd", "auroc")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int
    fp_within_range: int
    fp_out_of_range: int

    @property
    def n_pos(self) -> int:
        return self.tp + self.fp

    @property
    def n_true(self) -> int:
        return self.tp + self.fn


@dataclass(frozen=True)
class GraphMetrics:
    fdr: float
    tpr: float
    f1: float
    shd: int


def confusion(est: CausalTemporalGraph, truth: CausalTemporalGraph) -> ConfusionCounts:
    """Counts over the ``m * m * est.p`` candidate edges."""
    if est.m != truth.m:
        raise ValueError(f"graphs disagree on m: {est.m} vs {truth.m}")
    if truth.p > est.p:
        raise ValueError(f"estimate covers lags 1..{est.p} but truth has lags up to {truth.p}")
    est_mask = est.to_mask()
    true_mask = truth.to_mask(est.p)
    in_range = np.zeros_like(est_mask)
    in_range[:, : truth.p * truth.m] = True
    fp_mask = est_mask & ~true_mask
    tp = int(np.sum(est_mask & true_mask))
    fp = int(fp_mask.sum())
    fn = int(np.sum(~est_mask & true_mask))
    tn = int(np.sum(~est_mask & ~true_mask))
    fp_in = int(np.sum(fp_mask & in_range))
    return ConfusionCounts(tp, fp, fn, tn, fp_in, fp - fp_in)


def graph_metrics(c: ConfusionCounts) -> GraphMetrics:
    """FDR, TPR, F1 and SHD.

    Conventions for empty sets: FDR is 0 with no predicted edges, TPR is 1
    with no true edges, F1 is 0 when ``1 - FDR + TPR`` vanishes.
    """
    P, Tn = c.n_pos, c.n_true
    fdr = c.fp / P if P else 0.0
    tpr = c.tp / Tn if Tn else 1.0
    denom = 1.0 - fdr + tpr
    f1 = 2.0 * (1.0 - fdr) * tpr / denom if denom > 0 else 0.0
    return GraphMetrics(fdr, tpr, f1, P + Tn - 2 * c.tp)


def auroc(scores, labels) -> float:
    """Mann-Whitney AUROC with ties counted as one half."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel().astype(bool)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError(f"AUROC needs both classes, got {n_pos} positives and {n_neg} negatives")
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def default_omega_grid(scores: np.ndarray | None = None) -> np.ndarray:
    grid = np.round(np.arange(0.0, 1.0001, 0.01), 2)
    if scores is not None and scores.size and scores.max() > 1.0:
        grid = np.concatenate([grid, np.linspace(1.0, float(scores.max()), 21)[1:]])
    return grid


@dataclass
class EvaluationReport:
    omega: float
    counts: ConfusionCounts
    metrics: GraphMetrics
    auroc: float
    sweep: list[dict] = field(default_factory=list)
    best_omega: float = math.nan
    best_f1: float = math.nan
    histogram: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "omega": self.omega,
            **asdict(self.metrics),
            "auroc": self.auroc,
            "best_omega": self.best_omega,
            "best_f1": self.best_f1,
        }

    def to_document(self) -> dict:
        return {
            "omega": self.omega,
            "confusion": asdict(self.counts),
            "metrics": asdict(self.metrics),
            "auroc": self.auroc,
            "best_omega": self.best_omega,
            "best_f1": self.best_f1,
            "sweep": self.sweep,
            "histogram": self.histogram,
        }


def f1_sweep(learned: TemporalAdjacencyMatrix, truth: TemporalAdjacencyMatrix, omegas) -> list[dict]:
    truth_g = threshold(truth, 0.0)
    rows = []
    for w in omegas:
        c = confusion(threshold(learned, float(w)), truth_g)
        rows.append({"omega": float(w), **asdict(c), **asdict(graph_metrics(c))})
    return rows


def evaluate(
    learned: TemporalAdjacencyMatrix,
    truth: TemporalAdjacencyMatrix,
    omega: float = DEFAULT_OMEGA,
    omegas=None,
    bins: int = 20,
) -> EvaluationReport:
    """Score a learned TAM (lags ``1..s_o``) against the ground-truth TAM.

    AUROC uses ``|a_ij^tau|`` as the edge score; the F1 sweep over ``omegas``
    records the threshold with the best F1 (smallest such omega on ties).
    """
    if learned.m != truth.m:
        raise ValueError(f"TAMs disagree on m: {learned.m} vs {truth.m}")
    scores = np.abs(learned.weights)
    labels = truth.padded(learned.p).weights != 0
    truth_g = threshold(truth, 0.0)
    counts = confusion(threshold(learned, omega), truth_g)
    omegas = default_omega_grid(scores) if omegas is None else np.asarray(omegas, dtype=float)
    sweep = f1_sweep(learned, truth, omegas)
    best = max(sweep, key=lambda r: (r["f1"], -r["omega"]))
    edges = np.linspace(0.0, max(float(scores.max()), 1e-12), bins + 1)
    histogram = {
        "bin_edges": edges.tolist(),
        "true_edges": np.histogram(scores[labels], edges)[0].tolist(),
        "non_edges": np.histogram(scores[~labels], edges)[0].tolist(),
    }
    return EvaluationReport(
        omega=omega,
        counts=counts,
        metrics=graph_metrics(counts),
        auroc=auroc(scores, labels),
        sweep=sweep,
        best_omega=best["omega"],
        best_f1=best["f1"],
        histogram=histogram,
    )


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------

@dataclass
class RunResult:
    cell: str
    mode: str
    m: int
    seed: int
    method: str
    metrics: dict = field(default_factory=dict)
    seconds: float = 0.0
    error: str | None = None
    learned: np.ndarray | None = None
    truth: TemporalAdjacencyMatrix | None = None
    losses: list[float] | None = None
    data_digest: str | None = None

    def row(self) -> dict:
        return {"cell": self.cell, "mode": self.mode, "m": self.m, "seed": self.seed, "method": self.method,
                **self.metrics, "seconds": self.seconds, "error": self.error or ""}


@dataclass
class Aggregate:
    cell: str
    method: str
    n_runs: int
    n_failed: int
    mean: dict
    std: dict


def aggregate(results: list[RunResult]) -> list[Aggregate]:
    """Mean and (population) std of each metric per (cell, method)."""
    groups: dict[tuple[str, str], list[RunResult]] = {}
    for r in results:
        groups.setdefault((r.cell, r.method), []).append(r)
    out = []
    for (cell, method), runs in groups.items():
        ok = [r for r in runs if r.error is None]
        keys = list(ok[0].metrics) if ok else []
        mean = {k: float(np.mean([r.metrics[k] for r in ok])) for k in keys}
        std = {k: float(np.std([r.metrics[k] for r in ok])) for k in keys}
        out.append(Aggregate(cell, method, len(runs), len(runs) - len(ok), mean, std))
    return out


@dataclass
class BenchTask:
    cell: str
    gen: object  # GenConfig with the run's seed
    method: str
    model: dict
    train: object
    lasso: object
    omega: float


def _digest(values: np.ndarray) -> str:
    import hashlib

    return hashlib.sha256(np.ascontiguousarray(values).tobytes()).hexdigest()


def run_task(task: BenchTask) -> RunResult:
    from . import baseline, datagen
    from .model import GdbnConfig
    from .training import train

    gen = task.gen
    res = RunResult(task.cell, gen.mode, gen.m, gen.seed, task.method)
    t0 = time.perf_counter()
    try:
        ds = datagen.generate(gen)
        res.truth = ds.ground_truth
        res.data_digest = _digest(ds.values)
        gcfg = GdbnConfig(m=gen.m, **task.model)
        if task.method == "gdbn":
            report = train(ds, gcfg, task.train)
            learned = report.A
            res.losses = report.total
        elif task.method == "var_lasso":
            series = ds.values
            if task.train.standardize:
                series = (series - series.mean(axis=0)) / series.std(axis=0)
            learned = baseline.fit_lasso_var(series, gcfg.s_o, task.lasso).tam.weights
        else:
            raise ValueError(f"unknown method {task.method!r}")
        rep = evaluate(TemporalAdjacencyMatrix(learned, gen.m, gcfg.s_o), ds.ground_truth, task.omega)
        res.learned = learned
        res.metrics = rep.summary()
    except Exception as exc:  # recorded, never dropped
        res.error = f"{type(exc).__name__}: {exc}"
        res.metrics = {}
        traceback.print_exc()
    res.seconds = time.perf_counter() - t0
    return res


def benchmark(
    gen_configs,
    seeds,
    methods=("gdbn",),
    model: dict | None = None,
    train_config=None,
    lasso_config=None,
    omega: float = DEFAULT_OMEGA,
    jobs: int = 1,
    names=None,
) -> tuple[list[RunResult], list[Aggregate]]:
    """Generate, fit and score every (config, seed, method) cell.

    Each dataset is generated from ``config.with_(seed=seed)``, so every
    method in a cell sees identical data.  Model and training seeds follow the
    run seed.  Results come back sorted by (config order, seed, method order).
    """
    from .baseline import LassoConfig
    from .training import TrainConfig

    gen_configs = list(gen_configs)
    seeds = list(seeds)
    if not gen_configs or not seeds or not methods:
        raise ValueError("benchmark needs at least one config, seed and method")
    names = list(names) if names is not None else [f"{g.mode}_m{g.m}" for g in gen_configs]
    model = dict(model or {})
    train_config = train_config or TrainConfig()
    lasso_config = lasso_config or LassoConfig()
    tasks = []
    for name, gen in zip(names, gen_configs):
        for seed in seeds:
            for method in methods:
                tcfg = TrainConfig(**{**train_config.to_dict(), "seed": seed})
                tasks.append(BenchTask(name, gen.with_(seed=seed), method, model, tcfg, lasso_config, omega))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_task, tasks))
    else:
        results = [run_task(t) for t in tasks]
    return results, aggregate(results)
