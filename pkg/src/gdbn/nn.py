"""MLP layers, the Adam optimizer and a finite-difference gradient checker."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import tensor as T
from .tensor import Tensor

ACTIVATIONS: dict[str, Callable[[Tensor], Tensor]] = {
    "tanh": T.tanh,
    "relu": T.relu,
    "sin": T.sin,
    "identity": lambda x: x,
}


@dataclass
class MlpParams:
    """Weights ``(in, out)``, biases ``(out,)`` and one activation name per layer."""

    weights: list[Tensor]
    biases: list[Tensor]
    activations: list[str]

    def __post_init__(self):
        if not (len(self.weights) == len(self.biases) == len(self.activations)):
            raise ValueError("weights, biases and activations must have equal length")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError(f"layer {k}: weight {w.shape} and bias {b.shape} do not match")
            if k and self.weights[k - 1].shape[1] != w.shape[0]:
                raise ValueError(
                    f"layer {k}: input dim {w.shape[0]} != previous output dim "
                    f"{self.weights[k - 1].shape[1]}"
                )
        for name in self.activations:
            if name not in ACTIVATIONS:
                raise ValueError(f"unknown activation {name!r}")

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[1]

    def parameters(self) -> list[Tensor]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out


INIT_SCHEMES = ("fan_in", "glorot")


def init_mlp(
    sizes: Sequence[int],
    rng: np.random.Generator,
    activation: str = "tanh",
    out_activation: str = "identity",
    scheme: str = "fan_in",
) -> MlpParams:
    """Random MLP weights.

    ``scheme="fan_in"``: weights and biases Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    ``scheme="glorot"``: weights Uniform(-b, b) with b = sqrt(6 / (fan_in + fan_out)),
    biases zero; keeps activation variance roughly constant through tanh layers.
    """
    if scheme not in INIT_SCHEMES:
        raise ValueError(f"unknown init scheme {scheme!r}, expected one of {INIT_SCHEMES}")
    weights, biases, acts = [], [], []
    for k, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        if scheme == "glorot":
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(T.tensor(rng.uniform(-bound, bound, (fan_in, fan_out)), requires_grad=True))
            biases.append(T.tensor(np.zeros(fan_out), requires_grad=True))
        else:
            bound = 1.0 / np.sqrt(fan_in)
            weights.append(T.tensor(rng.uniform(-bound, bound, (fan_in, fan_out)), requires_grad=True))
            biases.append(T.tensor(rng.uniform(-bound, bound, fan_out), requires_grad=True))
        acts.append(out_activation if k == len(sizes) - 2 else activation)
    return MlpParams(weights, biases, acts)


def mlp_apply(params: MlpParams, x: Tensor) -> Tensor:
    if x.shape[-1] != params.in_dim:
        raise ValueError(f"MLP expects last dim {params.in_dim}, got input of shape {x.shape}")
    h = x
    for w, b, act in zip(params.weights, params.biases, params.activations):
        h = ACTIVATIONS[act](T.add(T.matmul(h, w), b))
    return h


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def adam_step(state: AdamState, params: Sequence[Tensor], grads: Sequence[np.ndarray | None]) -> AdamState:
    """One bias-corrected Adam update, applied to ``params`` in place.

    A ``None`` gradient is treated as zero.
    """
    if len(params) != len(grads):
        raise ValueError("params and grads differ in length")
    if not state.m:
        state.m = [np.zeros_like(p.data) for p in params]
        state.v = [np.zeros_like(p.data) for p in params]
    if len(state.m) != len(params):
        raise ValueError("optimizer state was built for a different parameter list")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if g is None:
            g = np.zeros_like(p.data)
        if g.shape != p.shape or m.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        if not np.all(np.isfinite(g)):
            raise T.NonFiniteError("adam_step: non-finite gradient")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p.data -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return state


# ---------------------------------------------------------------------------
# gradient checking
# ---------------------------------------------------------------------------

@dataclass
class GradCheckReport:
    """Per-parameter error between AD and central differences.

    ``errors[k]`` is ``max|ad - fd| / max(max|ad|, max|fd|)`` over parameter ``k``
    (0 when both gradients vanish).
    """

    errors: list[float]
    names: list[str]
    tolerance: float

    @property
    def max_error(self) -> float:
        return max(self.errors) if self.errors else 0.0

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance


def finite_difference_check(
    loss_fn: Callable[[], Tensor],
    params: Sequence[Tensor],
    tolerance: float = 1e-4,
    step: float = 1e-5,
    names: Sequence[str] | None = None,
) -> GradCheckReport:
    """Compare reverse-mode gradients of ``loss_fn()`` with central differences.

    ``loss_fn`` must be deterministic (fix any noise draws inside it).
    """
    for p in params:
        p.zero_grad()
    loss_fn().backward()
    ad = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]

    errors = []
    for p, g_ad in zip(params, ad):
        g_fd = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        out = g_fd.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + step
            up = loss_fn().item()
            flat[k] = orig - step
            down = loss_fn().item()
            flat[k] = orig
            out[k] = (up - down) / (2.0 * step)
        scale = max(np.max(np.abs(g_ad)), np.max(np.abs(g_fd)))
        errors.append(0.0 if scale == 0 else float(np.max(np.abs(g_ad - g_fd)) / scale))
    for p in params:
        p.zero_grad()
    names = list(names) if names is not None else [f"param{k}" for k in range(len(params))]
    return GradCheckReport(errors, names, tolerance)
