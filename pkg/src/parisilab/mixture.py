"""Mixture polynomial xi(s) = sum_p beta_p^2 s^p and the external field h."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DomainError, ValidationError

MAX_P = 64


@dataclass(frozen=True)
class MixtureSpec:
    """Temperature parameters ``(p, beta_p)`` and external field ``h``.

    ``betas`` is stored sorted by ``p``. Instances are hashable and are used
    as cache keys downstream.
    """

    betas: tuple[tuple[int, float], ...]
    h: float = 0.0

    def __post_init__(self) -> None:
        pairs = tuple(sorted((int(p), float(b)) for p, b in self.betas))
        ps = [p for p, _ in pairs]
        if len(set(ps)) != len(ps):
            raise ValidationError(f"duplicate p in betas: {ps}")
        for p, b in pairs:
            if p < 2 or p > MAX_P:
                raise ValidationError(f"p must lie in [2, {MAX_P}], got {p}")
            if not np.isfinite(b) or b < 0:
                raise ValidationError(f"beta_{p} must be finite and nonnegative, got {b}")
        if not any(b > 0 for _, b in pairs):
            raise ValidationError("at least one beta_p must be positive")
        if not np.isfinite(self.h):
            raise ValidationError("h must be finite")
        object.__setattr__(self, "betas", pairs)
        object.__setattr__(self, "h", float(self.h))

    @classmethod
    def from_pairs(cls, pairs: Iterable, h: float = 0.0) -> "MixtureSpec":
        return cls(tuple((int(p), float(b)) for p, b in pairs), float(h))

    @classmethod
    def sk(cls, beta: float, h: float = 0.0) -> "MixtureSpec":
        """Sherrington-Kirkpatrick model, xi(s) = beta^2 s^2."""
        return cls(((2, float(beta)),), float(h))

    def with_field(self, h: float) -> "MixtureSpec":
        return MixtureSpec(self.betas, h)

    @property
    def max_p(self) -> int:
        return self.betas[-1][0]

    def _coeffs(self) -> tuple[np.ndarray, np.ndarray]:
        p = np.array([p for p, _ in self.betas], dtype=float)
        c = np.array([b * b for _, b in self.betas])
        return p, c

    @staticmethod
    def _check(s, lo: float) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if np.any(s < lo) or np.any(s > 1.0) or np.any(np.isnan(s)):
            raise DomainError(f"argument outside [{lo}, 1]")
        return s

    def xi(self, s):
        """xi(s) for s in [-1, 1]."""
        s = self._check(s, -1.0)
        p, c = self._coeffs()
        return _poly(s, p, c)

    def xi_prime(self, s):
        s = self._check(s, 0.0)
        p, c = self._coeffs()
        return _poly(s, p - 1, p * c)

    def zeta(self, s):
        """Second derivative xi''(s); vanishes at 0 unless beta_2 > 0."""
        s = self._check(s, 0.0)
        p, c = self._coeffs()
        return _poly(s, p - 2, p * (p - 1) * c)

    def xi_moment(self, a: float, b: float) -> float:
        """Exact integral of s * xi''(s) over [a, b], i.e. [s xi'(s) - xi(s)]_a^b."""
        if a > b:
            raise DomainError(f"xi_moment needs a <= b, got a={a}, b={b}")
        if a < 0 or b > 1:
            raise DomainError("xi_moment needs 0 <= a <= b <= 1")

        def anti(s: float) -> float:
            p, c = self._coeffs()
            return float(np.sum((p - 1) * c * s**p))

        return anti(b) - anti(a)

    def to_dict(self) -> dict:
        return {"betas": [[p, b] for p, b in self.betas], "h": self.h}


def _poly(s: np.ndarray, powers: np.ndarray, coeffs: np.ndarray):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    for k, c in zip(powers, coeffs):
        out = out + c * s**k
    return out if out.ndim else float(out)
