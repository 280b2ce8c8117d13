"""VAR-lasso baseline: L1-penalized least squares on lagged values.

Without contemporaneous edges the lagged-only structure learning problem is
convex and needs no acyclicity term, so each target row of the TAM is an
independent lasso regression on the ``s_o * m`` lagged regressors.  Solved by
cyclic coordinate descent with soft-thresholding, all rows updated together.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .datagen import TimeSeriesDataset, WindowBatch
from .graph import TemporalAdjacencyMatrix

METHOD_LABEL = "VAR-lasso baseline"


@dataclass(frozen=True)
class LassoConfig:
    lam: float = 0.01
    max_iter: int = 5000
    tol: float = 1e-8
    standardize: bool = True

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.tol <= 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class LassoResult:
    tam: TemporalAdjacencyMatrix
    converged: bool
    sweeps: int
    objective: list[float] = field(default_factory=list)  # summed over rows, per sweep
    intercept: np.ndarray | None = None


def soft_threshold(rho, lam):
    """``sign(rho) * max(|rho| - lam, 0)``."""
    return np.sign(rho) * np.maximum(np.abs(rho) - lam, 0.0)


def lagged_design(data, s_o: int) -> tuple[np.ndarray, np.ndarray]:
    """Regressors ``[x^{t-1}, ..., x^{t-s_o}]`` (TAM column order) and targets ``x^t``.

    A series uses every ``t >= s_o``; a :class:`WindowBatch` (or window
    array) uses step ``s_o`` of each window as the target.
    """
    if isinstance(data, WindowBatch):
        data = data.windows
    if isinstance(data, TimeSeriesDataset):
        data = data.values
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 3:
        if arr.shape[1] <= s_o:
            raise ValueError(f"windows of length {arr.shape[1]} cannot provide {s_o} lags and a target")
        X = arr[:, s_o - 1 :: -1][:, :s_o].reshape(arr.shape[0], -1)
        return X, arr[:, s_o]
    if arr.ndim != 2:
        raise ValueError(f"expected a (T, m) series or (n, L, m) windows, got shape {arr.shape}")
    T, m = arr.shape
    if T <= s_o:
        raise ValueError(f"series of length {T} is too short for {s_o} lags")
    X = np.stack([arr[s_o - tau : T - tau] for tau in range(1, s_o + 1)], axis=1).reshape(T - s_o, -1)
    return X, arr[s_o:]


def fit_lasso_var(data, s_o: int, cfg: LassoConfig = LassoConfig()) -> LassoResult:
    """Minimize ``(1/n) ||y_i - X b_i||^2 + lam ||b_i||_1`` for every target ``i``.

    Columns are centered (an unpenalized intercept) and, with
    ``cfg.standardize``, scaled to unit variance; the penalty acts on the
    scaled coefficients and the returned TAM is mapped back to data units.
    """
    X, Y = lagged_design(data, s_o)
    n, k = X.shape
    m = Y.shape[1]
    x_mean, y_mean = X.mean(axis=0), Y.mean(axis=0)
    Xc, Yc = X - x_mean, Y - y_mean
    scale = Xc.std(axis=0) if cfg.standardize else np.ones(k)
    scale[scale == 0] = 1.0
    Xs = Xc / scale
    G = Xs.T @ Xs / n
    C = Xs.T @ Yc / n  # (k, m)
    yy = np.einsum("ij,ij->j", Yc, Yc) / n
    z = 2.0 * np.diag(G)

    def objective(B):
        return float(np.sum(yy - 2.0 * np.einsum("km,km->m", C, B) + np.einsum("km,kl,lm->m", B, G, B))
                     + cfg.lam * np.abs(B).sum())

    B = np.zeros((k, m))
    history = [objective(B)]
    converged = False
    sweeps = 0
    for sweeps in range(1, cfg.max_iter + 1):
        delta = 0.0
        for c in range(k):
            if z[c] == 0:
                continue
            old = B[c].copy()
            rho = 2.0 * (C[c] - G[c] @ B + G[c, c] * old)
            B[c] = soft_threshold(rho, cfg.lam) / z[c]
            delta = max(delta, float(np.max(np.abs(B[c] - old))))
        history.append(objective(B))
        if delta < cfg.tol:
            converged = True
            break
    if not converged:
        warnings.warn(f"{METHOD_LABEL}: no convergence after {cfg.max_iter} sweeps", RuntimeWarning, stacklevel=2)
    coef = (B / scale[:, None]).T  # (m, k)
    intercept = y_mean - coef @ x_mean
    return LassoResult(TemporalAdjacencyMatrix(coef, m, s_o), converged, sweeps, history, intercept)
