"""Exact free energy of small mixed p-spin systems by enumerating all 2^N
spin configurations.

    H(sigma) = sum_p beta_p N^{-(p-1)/2} sum_{i_1..i_p} g_{i_1..i_p} sigma_{i_1}...sigma_{i_p}
               + h sum_i sigma_i,

summing over all index tuples (diagonal ones included), so that
E H'(s1) H'(s2) = N xi(R(s1, s2)). The partition function is
Z = sum_sigma exp(+H(sigma)); -H' has the same law as H', so the sign only
fixes a convention.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError
from .mixture import MixtureSpec

MAX_N = 20
MIN_SEEDS = 8
CHUNK = 1 << 14


@dataclass(frozen=True)
class DisorderSample:
    """Gaussian couplings of one disorder realization.

    ``couplings[k]`` is the order-p array for the k-th active p of the
    mixture, drawn in increasing order of p from ``seed``.
    """

    N: int
    seed: int
    ps: tuple[int, ...]
    couplings: tuple[np.ndarray, ...]

    @classmethod
    def draw(cls, mixture: MixtureSpec, N: int, seed: int) -> "DisorderSample":
        if not 1 <= N <= MAX_N:
            raise DomainError(f"N must lie in [1, {MAX_N}], got {N}")
        rng = np.random.default_rng(seed)
        ps = tuple(p for p, b in mixture.betas if b > 0)
        return cls(N, seed, ps, tuple(rng.standard_normal((N,) * p) for p in ps))

    def energies(self, mixture: MixtureSpec, spins: np.ndarray) -> np.ndarray:
        """H'(sigma) for each row of ``spins`` (shape (n, N), entries +-1)."""
        spins = np.asarray(spins, dtype=float)
        beta = dict(mixture.betas)
        out = np.zeros(spins.shape[0])
        for p, g in zip(self.ps, self.couplings):
            v = g.reshape(self.N, -1)
            acc = spins @ v  # contract the first index
            for _ in range(p - 1):
                acc = acc.reshape(spins.shape[0], self.N, -1)
                acc = np.einsum("ci,cik->ck", spins, acc)
            out += beta[p] * self.N ** (-(p - 1) / 2) * acc[:, 0]
        return out


def spin_block(N: int, start: int, stop: int) -> np.ndarray:
    """Configurations start..stop-1 in binary order as +-1 rows."""
    idx = np.arange(start, stop, dtype=np.int64)[:, None]
    bits = (idx >> np.arange(N, dtype=np.int64)) & 1
    return 1.0 - 2.0 * bits


def log_partition(mixture: MixtureSpec, sample: DisorderSample) -> tuple[float, float]:
    """log Z for one disorder sample by chunked enumeration, and the average
    of H' over all configurations (its configuration-independent part)."""
    N = sample.N
    total = 2 ** N
    parts = []
    mean_energy = 0.0
    for start in range(0, total, CHUNK):
        spins = spin_block(N, start, min(start + CHUNK, total))
        e = sample.energies(mixture, spins)
        mean_energy += float(e.sum()) / total
        e += mixture.h * spins.sum(axis=1)
        top = float(e.max())
        parts.append((top, float(np.log(np.sum(np.exp(e - top))))))
    top = max(t for t, _ in parts)
    return top + math.log(sum(math.exp(t - top + l) for t, l in parts)), mean_energy


@dataclass
class OracleResult:
    """Per-seed (1/N) log Z_N and the per-seed constant part of H'/N.

    The constant part (the configuration average of H') shifts log Z by
    itself and has disorder mean exactly 0, so ``mean`` and ``se`` use
    ``values - shifts``: an unbiased estimate of E (1/N) log Z_N with most of
    the disorder noise removed at small N.
    """

    N: int
    seeds: list[int]
    values: list[float]
    shifts: list[float]

    @property
    def adjusted(self) -> np.ndarray:
        return np.asarray(self.values) - np.asarray(self.shifts)

    @property
    def mean(self) -> float:
        return float(np.mean(self.adjusted))

    @property
    def se(self) -> float:
        return float(np.std(self.adjusted, ddof=1) / math.sqrt(len(self.values)))

    def write_csv(self, path) -> None:
        """Rows N, seed, value; a final summary row holds mean and SE."""
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["N", "seed", "value"])
            for s, v in zip(self.seeds, self.values):
                wr.writerow([self.N, s, f"{v:.17g}"])
            wr.writerow([self.N, "mean", f"{self.mean:.17g}"])
            wr.writerow([self.N, "se", f"{self.se:.17g}"])


def exact_free_energy(mixture: MixtureSpec, N: int, seeds: Sequence[int]) -> OracleResult:
    """Disorder mean and SE of (1/N) log Z_N over the given seeds."""
    if N > MAX_N:
        raise DomainError(f"N={N} exceeds {MAX_N}: 2^N enumeration refused")
    seeds = [int(s) for s in seeds]
    if len(seeds) < MIN_SEEDS:
        raise DomainError(f"need at least {MIN_SEEDS} disorder samples, got {len(seeds)}")
    vals, shifts = [], []
    for s in seeds:
        logz, const = log_partition(mixture, DisorderSample.draw(mixture, N, s))
        vals.append(logz / N)
        shifts.append(const / N)
    return OracleResult(N, seeds, vals, shifts)


def annealed_value(mixture: MixtureSpec) -> float:
    """log 2 + xi(1)/2 + log cosh h, the Jensen upper bound."""
    return math.log(2.0) + 0.5 * float(mixture.xi(1.0)) + math.log(math.cosh(mixture.h))


@dataclass
class CovarianceCheck:
    overlaps: list[float]
    expected: list[float]
    estimates: list[float]
    ses: list[float]

    @property
    def z(self) -> list[float]:
        return [(e - x) / s for e, x, s in zip(self.estimates, self.expected, self.ses)]

    @property
    def passed(self) -> bool:
        return all(abs(v) <= 3.0 for v in self.z)


def covariance_self_test(mixture: MixtureSpec, N: int = 10, n_samples: int = 4000,
                         flips: Sequence[int] = (0, 2, 5, 8), seed: int = 0) -> CovarianceCheck:
    """Compare H'(s1) H'(s2) / N averaged over disorder with xi(R(s1, s2)).

    s2 is s1 with the first k spins flipped for each k in ``flips``.
    """
    rng = np.random.default_rng(seed)
    s1 = rng.choice([-1.0, 1.0], N)
    pairs = []
    for k in flips:
        s2 = s1.copy()
        s2[:k] *= -1
        pairs.append(s2)
    spins = np.vstack([s1] + pairs)
    seeds = np.random.SeedSequence(seed).generate_state(n_samples)
    prods = np.empty((n_samples, len(flips)))
    for j, sd in enumerate(seeds):
        e = DisorderSample.draw(mixture, N, int(sd)).energies(mixture, spins)
        prods[j] = e[0] * e[1:] / N
    R = [float(s1 @ s2 / N) for s2 in pairs]
    return CovarianceCheck(R, [float(mixture.xi(r)) for r in R], list(prods.mean(axis=0)),
                           list(prods.std(axis=0, ddof=1) / math.sqrt(n_samples)))


@dataclass
class TrendCheck:
    sizes: list[int]
    means: list[float]
    ses: list[float]
    target: float

    @property
    def monotone(self) -> bool:
        """Distances to the target never grow beyond 3 SE of the difference."""
        for a in range(len(self.sizes) - 1):
            da = abs(self.means[a] - self.target)
            db = abs(self.means[a + 1] - self.target)
            if db - da > 3.0 * math.hypot(self.ses[a], self.ses[a + 1]):
                return False
        return True

    @property
    def approaches(self) -> bool:
        return abs(self.means[-1] - self.target) < abs(self.means[0] - self.target)


def size_trend(mixture: MixtureSpec, sizes: Sequence[int], seeds_per_size: Sequence[Sequence[int]],
               target: float) -> TrendCheck:
    res = [exact_free_energy(mixture, N, s) for N, s in zip(sizes, seeds_per_size)]
    return TrendCheck(list(sizes), [r.mean for r in res], [r.se for r in res], target)
