"""Atomic probability measures on [0, 1] and their distribution functions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Union

import numpy as np

from .errors import DomainError, ValidationError

MERGE_TOL = 1e-12
DROP_WEIGHT = 1e-14
SUM_TOL = 1e-12


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous step function equal to ``values[i]`` on
    ``[breakpoints[i], breakpoints[i+1])`` and 0 to the left of the first
    breakpoint. The last value is the value on ``[breakpoints[-1], 1]``.
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        b = np.asarray(self.breakpoints)
        v = np.concatenate([[0.0], np.asarray(self.values)])
        out = v[np.searchsorted(b, s, side="right")]
        return out if out.ndim else float(out)

    def pieces(self) -> list[tuple[float, float, float]]:
        """``(left, right, value)`` for every piece covering [0, 1]."""
        edges = [0.0, *self.breakpoints, 1.0]
        vals = [0.0, *self.values]
        out = []
        for a, b, v in zip(edges[:-1], edges[1:], vals):
            if b > a:
                out.append((a, b, v))
        return out


@dataclass(frozen=True)
class AtomicMeasure:
    """Probability measure sum_l w_l delta_{q_l} on [0, 1].

    Use :meth:`from_pairs` for raw input; the constructor only validates.
    """

    atoms: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        q = np.asarray(self.atoms, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if q.ndim != 1 or q.shape != w.shape or q.size == 0:
            raise ValidationError("atoms and weights must be equal-length, nonempty")
        if np.any(q < 0) or np.any(q > 1):
            raise ValidationError("atoms must lie in [0, 1]")
        if np.any(np.diff(q) <= 0):
            raise ValidationError("atoms must be strictly increasing")
        if np.any(w <= 0):
            raise ValidationError("weights must be positive")
        if abs(w.sum() - 1.0) > SUM_TOL:
            raise ValidationError(f"weights must sum to 1, got {w.sum():.15g}")
        object.__setattr__(self, "atoms", tuple(float(a) for a in q))
        object.__setattr__(self, "weights", tuple(float(a) for a in w))

    @classmethod
    def from_pairs(cls, pairs: Iterable, *, normalize: bool = False) -> "AtomicMeasure":
        """Build from ``[(q, w), ...]`` in any order.

        Atoms closer than 1e-12 are merged, weights below 1e-14 dropped and the
        rest renormalized. Unless ``normalize`` is set, the input weights must
        already sum to 1 within 1e-12.
        """
        pairs = [(float(q), float(w)) for q, w in pairs]
        if not pairs:
            raise ValidationError("a measure needs at least one atom")
        for q, w in pairs:
            if not (0.0 <= q <= 1.0) or not np.isfinite(q):
                raise ValidationError(f"atom position {q} outside [0, 1]")
            if w < 0 or not np.isfinite(w):
                raise ValidationError(f"weight {w} is negative or non-finite")
        total = sum(w for _, w in pairs)
        if total <= 0:
            raise ValidationError("weights sum to zero")
        if not normalize and abs(total - 1.0) > SUM_TOL:
            raise ValidationError(f"weights must sum to 1, got {total:.15g}")
        pairs.sort()
        merged: list[list[float]] = []
        for q, w in pairs:
            if merged and q - merged[-1][0] < MERGE_TOL:
                merged[-1][1] += w
            else:
                merged.append([q, w])
        merged = [m for m in merged if m[1] >= DROP_WEIGHT]
        if not merged:
            raise ValidationError("all weights vanish")
        w = np.array([m[1] for m in merged])
        w = w / w.sum()
        return cls(tuple(m[0] for m in merged), tuple(w))

    @classmethod
    def dirac(cls, q: float) -> "AtomicMeasure":
        return cls((float(q),), (1.0,))

    @property
    def size(self) -> int:
        return len(self.atoms)

    @property
    def cumulative(self) -> np.ndarray:
        """m_l = mu([0, q_l]) for each atom; the last entry is exactly 1."""
        m = np.cumsum(self.weights)
        m[-1] = 1.0
        return m

    def pairs(self) -> list[list[float]]:
        return [[q, w] for q, w in zip(self.atoms, self.weights)]

    def distribution(self) -> StepFunction:
        return distribution(self)

    def __repr__(self) -> str:
        body = ", ".join(f"({q:.6g}, {w:.6g})" for q, w in zip(self.atoms, self.weights))
        return f"AtomicMeasure[{body}]"


def distribution(mu: AtomicMeasure) -> StepFunction:
    """alpha(s) = mu([0, s]) as a right-continuous step function."""
    return StepFunction(tuple(mu.atoms), tuple(mu.cumulative))


def _pieces_pair(mu0: AtomicMeasure, mu1: AtomicMeasure):
    edges = np.unique(np.concatenate([[0.0, 1.0], mu0.atoms, mu1.atoms]))
    left = edges[:-1]
    a0 = distribution(mu0)(left)
    a1 = distribution(mu1)(left)
    return edges, np.atleast_1d(a0), np.atleast_1d(a1)


def metric_d(mu0: AtomicMeasure, mu1: AtomicMeasure) -> float:
    """L1 distance between the distribution functions on [0, 1]."""
    edges, a0, a1 = _pieces_pair(mu0, mu1)
    return float(np.sum(np.abs(a0 - a1) * np.diff(edges)))


def mix(mu0: AtomicMeasure, mu1: AtomicMeasure, lam: float) -> AtomicMeasure:
    """Convex combination (1 - lam) mu0 + lam mu1."""
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"lambda must lie in [0, 1], got {lam}")
    if lam == 0.0:
        return mu0
    if lam == 1.0:
        return mu1
    pairs = [(q, (1 - lam) * w) for q, w in zip(mu0.atoms, mu0.weights)]
    pairs += [(q, lam * w) for q, w in zip(mu1.atoms, mu1.weights)]
    return AtomicMeasure.from_pairs(pairs, normalize=True)


def last_disagreement(mu0: AtomicMeasure, mu1: AtomicMeasure, tol: float = 1e-12) -> float:
    """Smallest s such that the two distribution functions agree on [s, 1]."""
    edges, a0, a1 = _pieces_pair(mu0, mu1)
    differ = np.nonzero(np.abs(a0 - a1) > tol)[0]
    if differ.size == 0:
        return 0.0
    return float(edges[differ[-1] + 1])


AlphaLike = Union[AtomicMeasure, StepFunction, Callable[[np.ndarray], np.ndarray]]


def discretize(alpha: AlphaLike, K: int, *, check_points: int = 2001) -> AtomicMeasure:
    """K-atom quantile discretization with metric_d error at most 1/K.

    Atom j sits at the generalized inverse of alpha at (j - 1/2)/K and carries
    weight 1/K. A measure or step function with at most K atoms is returned
    unchanged.
    """
    if K < 1:
        raise DomainError(f"K must be >= 1, got {K}")
    if isinstance(alpha, AtomicMeasure):
        if alpha.size <= K:
            return alpha
        alpha = distribution(alpha)
    if isinstance(alpha, StepFunction):
        w = np.diff(np.concatenate([[0.0], alpha.values]))
        if len(alpha.breakpoints) <= K and np.all(w >= 0):
            return AtomicMeasure.from_pairs(zip(alpha.breakpoints, w), normalize=True)

    grid = np.linspace(0.0, 1.0, check_points)
    vals = np.asarray(alpha(grid), dtype=float)
    if vals.shape != grid.shape or not np.all(np.isfinite(vals)):
        raise ValidationError("alpha must map arrays to finite arrays of the same shape")
    if np.any(np.diff(vals) < -1e-12):
        raise ValidationError("alpha is not nondecreasing")
    if vals.min() < -1e-12 or vals.max() > 1 + 1e-12 or abs(vals[-1] - 1.0) > 1e-12:
        raise ValidationError("alpha must take values in [0, 1] with alpha(1) = 1")

    levels = (np.arange(K) + 0.5) / K
    lo = np.zeros(K)
    hi = np.ones(K)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        above = np.asarray(alpha(mid), dtype=float) >= levels
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    # alpha(0) may already exceed the level: the inverse is then exactly 0
    at_zero = np.asarray(alpha(np.zeros(K)), dtype=float) >= levels
    q = np.where(at_zero, 0.0, hi)
    return AtomicMeasure.from_pairs([(qq, 1.0 / K) for qq in q], normalize=True)
