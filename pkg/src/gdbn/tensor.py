"""Dense float64 tensors with define-by-run reverse-mode differentiation.

Every operation records its parents and a closure that maps the output
gradient to input gradients.  ``Tensor.backward`` walks the recorded graph
once in reverse topological order.  NumPy supplies the array storage and the
elementwise/matrix kernels; the differentiation rules live here.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "NonFiniteError",
    "tensor",
    "constant",
    "matmul",
    "add",
    "sub",
    "mul",
    "scalar_mul",
    "sin",
    "cos",
    "tanh",
    "relu",
    "exp",
    "log",
    "square",
    "abs",
    "clip",
    "sum",
    "mean",
    "concat",
    "stack",
    "reshape",
    "broadcast_to",
]

DTYPE = np.float64


class NonFiniteError(FloatingPointError):
    """A primitive produced NaN or Inf."""


def _check_finite(name: str, value: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(value)):
        raise NonFiniteError(f"{name}: non-finite value in result of shape {value.shape}")
    return value


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after NumPy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """A node of the tape: value, accumulated gradient and the producing op."""

    __slots__ = ("data", "grad", "requires_grad", "op", "_parents", "_backward")

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        op: str = "leaf",
        parents: Sequence["Tensor"] = (),
        backward: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = None,
    ):
        self.data = _check_finite(op, np.asarray(data, dtype=DTYPE))
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.op = op
        self._parents = tuple(parents)
        self._backward = backward

    # -- introspection -------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def is_leaf(self) -> bool:
        return not self._parents

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self.op!r}, requires_grad={self.requires_grad})"

    def zero_grad(self) -> None:
        self.grad = None

    # -- differentiation ------------------------------------------------
    def backward(self) -> None:
        """Accumulate d(self)/d(leaf) into ``leaf.grad`` for every reachable leaf."""
        if self.data.size != 1:
            raise ValueError(f"backward needs a scalar root, got shape {self.shape}")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen and parent.requires_grad:
                    stack.append((parent, False))

        grads: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node.is_leaf:
                node.grad = g if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg

    # -- operator sugar ---------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scalar_mul(self, other)
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scalar_mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return _slice(self, index)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def sum(self, axis=None):
        return sum(self, axis)

    def mean(self, axis=None):
        return mean(self, axis)


def tensor(data, requires_grad: bool = False) -> Tensor:
    """Leaf tensor owning a private float64 copy of ``data``."""
    return Tensor(np.array(data, dtype=DTYPE), requires_grad=requires_grad)


def constant(data) -> Tensor:
    return tensor(data, requires_grad=False)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else tensor(x)


def _make(op: str, value: np.ndarray, parents: Sequence[Tensor], backward) -> Tensor:
    needs = any(p.requires_grad for p in parents)
    return Tensor(value, requires_grad=needs, op=op, parents=parents if needs else (),
                  backward=backward if needs else None)


# ---------------------------------------------------------------------------
# binary primitives
# ---------------------------------------------------------------------------

def matmul(a, b) -> Tensor:
    """Matrix product with NumPy batch broadcasting over leading dimensions."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ValueError(f"matmul needs operands of rank >= 2, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    av, bv = a.data, b.data

    def backward(g):
        ga = _unbroadcast(g @ np.swapaxes(bv, -1, -2), av.shape) if a.requires_grad else None
        gb = _unbroadcast(np.swapaxes(av, -1, -2) @ g, bv.shape) if b.requires_grad else None
        return ga, gb

    return _make("matmul", av @ bv, (a, b), backward)


def _check_broadcast(op: str, a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ValueError(f"{op} shape mismatch: {a.shape} vs {b.shape}") from None


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast("add", a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _make("add", a.data + b.data, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast("sub", a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _make("sub", a.data - b.data, (a, b), backward)


def mul(a, b) -> Tensor:
    """Elementwise product."""
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast("mul", a, b)
    av, bv = a.data, b.data

    def backward(g):
        ga = _unbroadcast(g * bv, av.shape) if a.requires_grad else None
        gb = _unbroadcast(g * av, bv.shape) if b.requires_grad else None
        return ga, gb

    return _make("mul", av * bv, (a, b), backward)


def scalar_mul(a, c: float) -> Tensor:
    a = _as_tensor(a)
    c = float(c)
    return _make("scalar_mul", a.data * c, (a,), lambda g: (g * c,))


# ---------------------------------------------------------------------------
# unary primitives
# ---------------------------------------------------------------------------

def sin(a) -> Tensor:
    a = _as_tensor(a)
    x = a.data
    return _make("sin", np.sin(x), (a,), lambda g: (g * np.cos(x),))


def cos(a) -> Tensor:
    a = _as_tensor(a)
    x = a.data
    return _make("cos", np.cos(x), (a,), lambda g: (-g * np.sin(x),))


def tanh(a) -> Tensor:
    a = _as_tensor(a)
    y = np.tanh(a.data)
    return _make("tanh", y, (a,), lambda g: (g * (1.0 - y * y),))


def relu(a) -> Tensor:
    a = _as_tensor(a)
    mask = a.data > 0
    return _make("relu", np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))


def exp(a) -> Tensor:
    a = _as_tensor(a)
    with np.errstate(over="ignore"):
        y = np.exp(a.data)
    return _make("exp", y, (a,), lambda g: (g * y,))


def log(a) -> Tensor:
    a = _as_tensor(a)
    x = a.data
    if np.any(x <= 0):
        raise NonFiniteError("log: non-positive input")
    return _make("log", np.log(x), (a,), lambda g: (g / x,))


def square(a) -> Tensor:
    a = _as_tensor(a)
    x = a.data
    return _make("square", x * x, (a,), lambda g: (2.0 * g * x,))


def abs(a) -> Tensor:  # noqa: A001 - mirrors numpy naming
    """Absolute value; the subgradient at exactly zero is 0."""
    a = _as_tensor(a)
    x = a.data
    return _make("abs", np.abs(x), (a,), lambda g: (g * np.sign(x),))


def clip(a, lo: float, hi: float) -> Tensor:
    """Clamp into [lo, hi]; gradient passes only where the input is inside."""
    a = _as_tensor(a)
    x = a.data
    inside = (x >= lo) & (x <= hi)
    return _make("clip", np.clip(x, lo, hi), (a,), lambda g: (g * inside,))


# ---------------------------------------------------------------------------
# reductions and shape manipulation
# ---------------------------------------------------------------------------

def _norm_axes(axis, ndim: int) -> tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(ax % ndim for ax in axis)


def sum(a, axis=None) -> Tensor:  # noqa: A001
    a = _as_tensor(a)
    shape = a.shape
    axes = _norm_axes(axis, a.ndim)
    kept = tuple(1 if i in axes else n for i, n in enumerate(shape))

    def backward(g):
        return (np.broadcast_to(np.reshape(g, kept), shape).copy(),)

    return _make("sum", a.data.sum(axis=axes), (a,), backward)


def mean(a, axis=None) -> Tensor:
    a = _as_tensor(a)
    axes = _norm_axes(axis, a.ndim)
    count = int(np.prod([a.shape[i] for i in axes])) if axes else 1
    return scalar_mul(sum(a, axes), 1.0 / count)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    """Concatenate along ``axis`` (default: the feature / last dimension)."""
    tensors = [_as_tensor(t) for t in tensors]
    ndim = tensors[0].ndim
    ax = axis % ndim
    for t in tensors[1:]:
        if t.ndim != ndim or any(t.shape[i] != tensors[0].shape[i] for i in range(ndim) if i != ax):
            raise ValueError(f"concat shape mismatch: {[t.shape for t in tensors]}")
    bounds = np.cumsum([0] + [t.shape[ax] for t in tensors])

    def backward(g):
        return [np.take(g, np.arange(bounds[k], bounds[k + 1]), axis=ax) for k in range(len(tensors))]

    return _make("concat", np.concatenate([t.data for t in tensors], axis=ax), tensors, backward)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    shapes = {t.shape for t in tensors}
    if len(shapes) != 1:
        raise ValueError(f"stack shape mismatch: {sorted(shapes)}")
    value = np.stack([t.data for t in tensors], axis=axis)
    ax = axis % value.ndim

    def backward(g):
        return [np.take(g, k, axis=ax) for k in range(len(tensors))]

    return _make("stack", value, tensors, backward)


def _is_basic_index(index) -> bool:
    items = index if isinstance(index, tuple) else (index,)
    return all(isinstance(i, (slice, int, type(Ellipsis))) or i is None for i in items)


def _slice(a: Tensor, index) -> Tensor:
    shape = a.shape

    basic = _is_basic_index(index)

    def backward(g):
        out = np.zeros(shape, dtype=DTYPE)
        if basic:
            out[index] = g
        else:
            np.add.at(out, index, g)
        return (out,)

    return _make("slice", a.data[index], (a,), backward)


def reshape(a, shape) -> Tensor:
    a = _as_tensor(a)
    src = a.shape
    return _make("reshape", a.data.reshape(shape), (a,), lambda g: (g.reshape(src),))


def broadcast_to(a, shape) -> Tensor:
    a = _as_tensor(a)
    src = a.shape
    try:
        value = np.broadcast_to(a.data, shape).copy()
    except ValueError:
        raise ValueError(f"cannot broadcast {src} to {tuple(shape)}") from None
    return _make("broadcast", value, (a,), lambda g: (_unbroadcast(g, src),))
