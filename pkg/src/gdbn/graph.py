"""Temporal adjacency matrices, causal temporal graphs and their text format.

A temporal adjacency matrix (TAM) of ``m`` variables and maximum lag ``p`` is
the ``m x (p*m)`` block row ``[A^1 | ... | A^p]``; entry ``(i, (tau-1)*m + j)``
is the lag-``tau`` effect of variable ``j`` on variable ``i``.  Indices are
0-based in memory and 1-based in the text format.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

Edge = tuple[int, int, int]  # (source j, target i, lag tau), tau >= 1


class ParseError(ValueError):
    """Malformed TAM / graph text."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


@dataclass(frozen=True, eq=False)
class TemporalAdjacencyMatrix:
    weights: np.ndarray
    m: int
    p: int

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.shape != (self.m, self.p * self.m):
            raise ValueError(f"TAM weights must have shape ({self.m}, {self.p * self.m}), got {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("TAM weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_weights(cls, weights) -> "TemporalAdjacencyMatrix":
        w = np.asarray(weights, dtype=np.float64)
        m = w.shape[0]
        if m == 0 or w.ndim != 2 or w.shape[1] % m:
            raise ValueError(f"cannot infer (m, p) from shape {w.shape}")
        return cls(w, m, w.shape[1] // m)

    @classmethod
    def zeros(cls, m: int, p: int) -> "TemporalAdjacencyMatrix":
        return cls(np.zeros((m, p * m)), m, p)

    def lag_block(self, tau: int) -> np.ndarray:
        """``A^tau`` as an ``m x m`` array, ``tau`` in ``1..p``."""
        if not 1 <= tau <= self.p:
            raise IndexError(f"lag {tau} outside 1..{self.p}")
        return self.weights[:, (tau - 1) * self.m : tau * self.m]

    def as_cube(self) -> np.ndarray:
        """Weights as a ``(p, m, m)`` array indexed ``[tau-1, i, j]``."""
        return self.weights.reshape(self.m, self.p, self.m).transpose(1, 0, 2)

    def get(self, i: int, j: int, tau: int) -> float:
        return float(self.weights[i, (tau - 1) * self.m + j])

    def padded(self, p: int) -> "TemporalAdjacencyMatrix":
        """Extend (with zero blocks) or truncate to maximum lag ``p``."""
        cube = np.zeros((p, self.m, self.m))
        k = min(p, self.p)
        cube[:k] = self.as_cube()[:k]
        return TemporalAdjacencyMatrix(cube.transpose(1, 0, 2).reshape(self.m, p * self.m), self.m, p)

    def __eq__(self, other):
        if not isinstance(other, TemporalAdjacencyMatrix):
            return NotImplemented
        return self.m == other.m and self.p == other.p and np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash((self.m, self.p, self.weights.tobytes()))


@dataclass(frozen=True)
class CausalTemporalGraph:
    m: int
    p: int
    edges: frozenset[Edge] = field(default_factory=frozenset)

    def __post_init__(self):
        edges = frozenset(tuple(int(v) for v in e) for e in self.edges)
        for j, i, tau in edges:
            if not (0 <= j < self.m and 0 <= i < self.m):
                raise ValueError(f"edge {(j, i, tau)} has a node outside 0..{self.m - 1}")
            if not 1 <= tau <= self.p:
                raise ValueError(f"edge {(j, i, tau)} has lag outside 1..{self.p}")
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_edges(cls, m: int, p: int, edges: Iterable[Edge]) -> "CausalTemporalGraph":
        return cls(m, p, frozenset(edges))

    def to_mask(self, p: int | None = None) -> np.ndarray:
        """Boolean ``m x (p*m)`` support in TAM layout."""
        p = self.p if p is None else p
        mask = np.zeros((self.m, p * self.m), dtype=bool)
        for j, i, tau in self.edges:
            if tau <= p:
                mask[i, (tau - 1) * self.m + j] = True
        return mask

    def __len__(self):
        return len(self.edges)


def support(A: TemporalAdjacencyMatrix) -> CausalTemporalGraph:
    return threshold(A, 0.0)


def threshold(A: TemporalAdjacencyMatrix, omega: float) -> CausalTemporalGraph:
    """Keep edge ``(j, i, tau)`` iff ``|a_ij^tau| > omega`` (ties are dropped)."""
    if omega < 0:
        raise ValueError(f"omega must be nonnegative, got {omega}")
    rows, cols = np.nonzero(np.abs(A.weights) > omega)
    edges = {(int(c % A.m), int(r), int(c // A.m) + 1) for r, c in zip(rows, cols)}
    return CausalTemporalGraph(A.m, A.p, frozenset(edges))


@dataclass
class HypothesisReport:
    h1_violations: list[tuple[int, int]]  # (i, tau)
    h2_violations: list[tuple[int, int]]  # (j, i)

    @property
    def ok(self) -> bool:
        return not self.h1_violations and not self.h2_violations


def validate_hypotheses(g: CausalTemporalGraph) -> HypothesisReport:
    """Check H1 (self-lag exactly one) and H2 (one lag per ordered pair).

    A missing lag-1 self edge is reported as the H1 violation ``(i, 1)``.
    """
    h1 = []
    lags: dict[tuple[int, int], list[int]] = {}
    for j, i, tau in g.edges:
        lags.setdefault((j, i), []).append(tau)
    for i in range(g.m):
        self_lags = lags.get((i, i), [])
        if 1 not in self_lags:
            h1.append((i, 1))
        h1.extend((i, tau) for tau in sorted(self_lags) if tau != 1)
    h2 = sorted(pair for pair, taus in lags.items() if len(taus) > 1)
    return HypothesisReport(sorted(h1), h2)


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

def serialize(obj: TemporalAdjacencyMatrix | CausalTemporalGraph) -> str:
    """Header ``m=<int> p=<int>`` then one ``i j tau [weight]`` line per entry (1-based).

    TAMs list every nonzero entry with its weight (``repr`` precision, so the
    round trip is exact); binary graphs omit the weight column.
    """
    lines = [f"m={obj.m} p={obj.p}"]
    if isinstance(obj, TemporalAdjacencyMatrix):
        rows, cols = np.nonzero(obj.weights)
        for r, c in sorted(zip(rows.tolist(), cols.tolist()), key=lambda rc: (rc[1] // obj.m, rc[0], rc[1] % obj.m)):
            tau, j = divmod(c, obj.m)
            lines.append(f"{r + 1} {j + 1} {tau + 1} {float(obj.weights[r, c])!r}")
    elif isinstance(obj, CausalTemporalGraph):
        for j, i, tau in sorted(obj.edges, key=lambda e: (e[2], e[1], e[0])):
            lines.append(f"{i + 1} {j + 1} {tau}")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    return "\n".join(lines) + "\n"


def _parse_header(line: str) -> tuple[int, int]:
    fields = dict(tok.split("=", 1) for tok in line.split() if "=" in tok)
    if set(fields) != {"m", "p"} or len(line.split()) != 2:
        raise ParseError(f"expected header 'm=<int> p=<int>', got {line!r}", 1)
    try:
        m, p = int(fields["m"]), int(fields["p"])
    except ValueError:
        raise ParseError(f"non-integer m or p in header {line!r}", 1) from None
    if m < 1 or p < 1:
        raise ParseError(f"m and p must be positive, got m={m} p={p}", 1)
    return m, p


def deserialize(text: str, kind: str = "auto") -> TemporalAdjacencyMatrix | CausalTemporalGraph:
    """Inverse of :func:`serialize`.

    ``kind`` is ``"tam"``, ``"graph"`` or ``"auto"``; in auto mode weighted
    lines give a TAM and bare lines (or no lines at all) give a graph.
    """
    if kind not in ("auto", "tam", "graph"):
        raise ValueError(f"unknown kind {kind!r}")
    lines = [ln for ln in text.splitlines()]
    if not lines or not lines[0].strip():
        raise ParseError("missing header", 1)
    m, p = _parse_header(lines[0].strip())
    entries = []
    widths = set()
    for lineno, raw in enumerate(lines[1:], start=2):
        parts = raw.split()
        if not parts:
            continue
        if len(parts) not in (3, 4):
            raise ParseError(f"expected 'i j tau [weight]', got {raw!r}", lineno)
        try:
            i, j, tau = (int(v) for v in parts[:3])
        except ValueError:
            raise ParseError(f"non-integer index in {raw!r}", lineno) from None
        if not (1 <= i <= m and 1 <= j <= m):
            raise ParseError(f"variable index outside 1..{m}", lineno)
        if not 1 <= tau <= p:
            raise ParseError(f"lag {tau} outside 1..{p}", lineno)
        weight = None
        if len(parts) == 4:
            try:
                weight = float(parts[3])
            except ValueError:
                raise ParseError(f"bad weight {parts[3]!r}", lineno) from None
            if not np.isfinite(weight):
                raise ParseError("weight must be finite", lineno)
        widths.add(len(parts))
        entries.append((i - 1, j - 1, tau, weight, lineno))
    if len(widths) > 1:
        raise ParseError("mixed weighted and unweighted entries")
    if kind == "tam" and widths == {3}:
        raise ParseError("expected weighted TAM entries 'i j tau weight'")
    if kind == "graph" and widths == {4}:
        raise ParseError("expected unweighted graph entries 'i j tau'")
    if widths == {3} or (not widths and kind != "tam"):
        edges = set()
        for i, j, tau, _, lineno in entries:
            if (j, i, tau) in edges:
                raise ParseError("duplicate edge", lineno)
            edges.add((j, i, tau))
        return CausalTemporalGraph(m, p, frozenset(edges))
    weights = np.zeros((m, p * m))
    seen = set()
    for i, j, tau, w, lineno in entries:
        col = (tau - 1) * m + j
        if (i, col) in seen:
            raise ParseError("duplicate entry", lineno)
        seen.add((i, col))
        weights[i, col] = w
    return TemporalAdjacencyMatrix(weights, m, p)


def save(obj, path) -> None:
    with open(path, "w") as fh:
        fh.write(serialize(obj))


def load(path, kind: str = "auto"):
    with open(path) as fh:
        return deserialize(fh.read(), kind)
