"""Minimization of the free-energy functional over K-atom measures, and the
numerical convexity and uniqueness checks built on it."""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError
from .functional import FunctionalReport, free_energy, linear_term, solution
from .measure import AtomicMeasure, last_disagreement, metric_d, mix
from .mixture import MixtureSpec
from .pde import GridParams, build_solution, functional_value, gaussian_rule, nested_quadrature

log = logging.getLogger(__name__)

LOG2 = math.log(2.0)
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class RSBAnsatz:
    """K-atom measures parameterized by a point of the unit cube [0, 1]^(2K-1).

    The first K coordinates are the atom positions q_j and the remaining K-1
    the cumulative masses m_j = mu([0, q_j]) (m_K = 1). Both groups are sorted
    on decoding, so every point of the cube is a valid measure.
    """

    K: int

    def __post_init__(self) -> None:
        if self.K < 1:
            raise DomainError(f"K must be >= 1, got {self.K}")

    @property
    def dim(self) -> int:
        return 2 * self.K - 1

    def decode(self, theta) -> AtomicMeasure:
        theta = np.clip(np.asarray(theta, dtype=float), 0.0, 1.0)
        q = np.sort(theta[: self.K])
        m = np.concatenate([np.sort(theta[self.K:]), [1.0]])
        w = np.diff(np.concatenate([[0.0], m]))
        return AtomicMeasure.from_pairs(zip(q, w), normalize=True)

    def encode(self, mu: AtomicMeasure, pad=None) -> np.ndarray:
        """Inverse of :meth:`decode`; missing atoms are placed at ``pad``
        positions (default: on top of the last atom) with zero mass."""
        if mu.size > self.K:
            raise DomainError(f"measure has {mu.size} atoms, ansatz holds {self.K}")
        extra = self.K - mu.size
        pad = [mu.atoms[-1]] * extra if pad is None else list(pad)[:extra]
        q = np.sort(np.concatenate([mu.atoms, pad]))
        # cumulative masses at the sorted positions
        m = np.array([sum(w for a, w in zip(mu.atoms, mu.weights) if a <= x) for x in q])
        return np.clip(np.concatenate([q, m[:-1]]), 0.0, 1.0)


def canonical(mu: AtomicMeasure, dq: float = 1e-6, w_min: float = 1e-8) -> AtomicMeasure:
    """Prune atoms lighter than ``w_min`` and merge atoms closer than ``dq``."""
    pairs = [(q, w) for q, w in zip(mu.atoms, mu.weights) if w >= w_min] or list(zip(mu.atoms, mu.weights))
    merged: list[list[float]] = []
    for q, w in pairs:
        if merged and q - merged[-1][0] < dq:
            tot = merged[-1][1] + w
            merged[-1][0] = (merged[-1][0] * merged[-1][1] + q * w) / tot
            merged[-1][1] = tot
        else:
            merged.append([q, w])
    return AtomicMeasure.from_pairs(merged, normalize=True)


def rs_overlap(mixture: MixtureSpec, iters: int = 2000, tol: float = 1e-14) -> float:
    """Replica-symmetric fixed point q = E tanh^2(h + z sqrt(xi'(q))), iterated from q = 1."""
    q = 1.0
    for _ in range(iters):
        sigma = math.sqrt(float(mixture.xi_prime(q)))
        z, w = gaussian_rule(round(sigma, 14))
        new = float(np.tanh(mixture.h + sigma * z) ** 2 @ w)
        if abs(new - q) < tol:
            return new
        q = new
    return q


class Objective:
    """theta -> free energy of the decoded measure, counting evaluations.

    Uses nested quadrature when the level count allows it, otherwise the
    grid recursion on ``search_params``.
    """

    def __init__(self, mixture: MixtureSpec, ansatz: RSBAnsatz, search_params: GridParams,
                 max_points: int = 8_000_000):
        self.mixture = mixture
        self.ansatz = ansatz
        self.search_params = search_params
        self.max_points = max_points
        self.calls = 0
        self._memo: dict[AtomicMeasure, float] = {}

    def value(self, mu: AtomicMeasure) -> float:
        hit = self._memo.get(mu)
        if hit is not None:
            return hit
        self.calls += 1
        try:
            p = nested_quadrature(self.mixture, mu, self.mixture.h, self.search_params.quad_density,
                                  max_points=self.max_points)
        except ConfigurationError:
            p = functional_value(self.mixture, mu, self.mixture.h, self.search_params)
        out = LOG2 + p - linear_term(self.mixture, mu)
        if len(self._memo) > 100_000:
            self._memo.clear()
        self._memo[mu] = out
        return out

    def __call__(self, theta) -> float:
        return self.value(self.ansatz.decode(theta))


def golden_section(f, a: float, b: float, tol: float) -> tuple[float, float]:
    """Minimize a scalar function on [a, b]; endpoints are candidates too."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    lo, hi = a, b
    while hi - lo > tol:
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - GOLDEN * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + GOLDEN * (hi - lo)
            fd = f(d)
    cands = [(fc, c), (fd, d), (f(a), a), (f(b), b)]
    fbest, xbest = min(cands)
    return xbest, fbest


def _line(f, theta: np.ndarray, direction: np.ndarray, fx: float, tol: float):
    """Golden-section search of f(theta + t d) over the t-range that stays in the cube."""
    with np.errstate(divide="ignore", invalid="ignore"):
        up = np.where(direction > 0, (1.0 - theta) / direction,
                      np.where(direction < 0, -theta / direction, np.inf))
    t_max = float(np.min(up))
    if not np.isfinite(t_max) or t_max <= 0:
        return theta, fx
    t, ft = golden_section(lambda t: f(np.clip(theta + t * direction, 0.0, 1.0)), 0.0, t_max,
                           tol / max(np.max(np.abs(direction)), 1e-300))
    if ft < fx:
        return np.clip(theta + t * direction, 0.0, 1.0), ft
    return theta, fx


def coordinate_sweeps(f, theta: np.ndarray, tol_x: float, tol_f: float, max_sweeps: int):
    """Golden-section line searches along each coordinate in turn; after each
    sweep a further line search follows the sweep's net displacement.

    The first sweep searches all of [0, 1]; later ones a window a few times
    wider than the coordinate's previous move.
    """
    theta = theta.copy()
    fx = f(theta)
    radius = np.full(theta.size, 1.0)
    converged = False
    for _ in range(max_sweeps):
        start, origin = fx, theta.copy()
        for k in range(theta.size):
            def line(t, k=k):
                trial = theta.copy()
                trial[k] = t
                return f(trial)

            lo, hi = max(0.0, theta[k] - radius[k]), min(1.0, theta[k] + radius[k])
            t, ft = golden_section(line, lo, hi, tol_x)
            if ft < fx:
                theta[k], fx = t, ft
        step = theta - origin
        if np.any(step != 0):
            theta, fx = _line(f, theta, step, fx, tol_x)
        radius = np.clip(4.0 * np.abs(theta - origin), 1e3 * tol_x, 0.5)
        if start - fx <= tol_f:
            converged = True
            break
    return theta, fx, converged


def pattern_search(f, theta: np.ndarray, fx: float, step: float = 1e-2, min_step: float = 1e-9,
                   max_iter: int = 20_000):
    """Hooke-Jeeves pattern search on the unit cube."""
    base = theta.copy()
    evals = 0

    def explore(x, fx, step):
        nonlocal evals
        x = x.copy()
        for k in range(x.size):
            for sgn in (1.0, -1.0):
                trial = x.copy()
                trial[k] = min(1.0, max(0.0, trial[k] + sgn * step))
                if trial[k] == x[k]:
                    continue
                ft = f(trial)
                evals += 1
                if ft < fx:
                    x, fx = trial, ft
                    break
        return x, fx

    while step >= min_step and evals < max_iter:
        x, fnew = explore(base, fx, step)
        if fnew < fx:
            while evals < max_iter:
                jump = np.clip(x + (x - base), 0.0, 1.0)
                base, fx = x, fnew
                fj = f(jump)
                evals += 1
                x2, f2 = explore(jump, fj, step)
                if f2 < fx:
                    x, fnew = x2, f2
                else:
                    break
        else:
            step *= 0.5
    return base, fx, step < min_step


@dataclass
class RestartRecord:
    restart_id: int
    init: str
    theta: np.ndarray
    measure: AtomicMeasure
    search_value: float
    report: FunctionalReport
    converged: bool
    evaluations: int

    @property
    def value(self) -> float:
        return self.report.free_energy


@dataclass
class MinimizeResult:
    measure: AtomicMeasure
    report: FunctionalReport
    restarts: list[RestartRecord]
    status: str
    K: int

    @property
    def error_budget(self) -> float:
        return max(r.report.error_budget for r in self.restarts)

    def restart_table(self) -> list[tuple[int, float, float]]:
        """``(restart_id, value, d_to_best)`` rows."""
        return [(r.restart_id, r.value, metric_d(r.measure, self.measure)) for r in self.restarts]


def initial_points(mixture: MixtureSpec, K: int, restarts: int, rng: np.random.Generator):
    """Stratified starts: equal-weight uniform atoms, delta_0, delta at the
    replica-symmetric overlap, then uniform random points of the cube."""
    ansatz = RSBAnsatz(K)
    uniform = AtomicMeasure.from_pairs([((j + 0.5) / K, 1.0 / K) for j in range(K)], normalize=True)
    q_rs = rs_overlap(mixture)
    fixed = [
        ("uniform", ansatz.encode(uniform)),
        ("dirac0", _padded_start(ansatz, AtomicMeasure.dirac(0.0))),
        ("rs", _padded_start(ansatz, AtomicMeasure.dirac(q_rs))),
    ]
    out = fixed[:restarts]
    while len(out) < restarts:
        out.append(("random", rng.uniform(0.0, 1.0, ansatz.dim)))
    return out


def _padded_start(ansatz: RSBAnsatz, mu: AtomicMeasure, eps: float = 1e-3) -> np.ndarray:
    """Encode ``mu`` with its spare atoms placed in the widest gaps of [0, 1]
    carrying mass ``eps`` each, so that coordinate moves can grow them.

    Zero-mass padding sits on a saddle of the ansatz; this start does not.
    """
    pairs = [(q, w) for q, w in zip(mu.atoms, mu.weights)]
    for _ in range(ansatz.K - mu.size):
        edges = sorted({0.0, 1.0, *(q for q, _ in pairs)})
        lo, hi = max(zip(edges[:-1], edges[1:]), key=lambda e: e[1] - e[0])
        pairs = [(q, w * (1.0 - eps)) for q, w in pairs] + [(0.5 * (lo + hi), eps)]
    return ansatz.encode(AtomicMeasure.from_pairs(pairs, normalize=True))


@dataclass(frozen=True)
class SearchSettings:
    tol_x: float = 1e-6
    tol_f: float = 1e-11
    max_sweeps: int = 60
    polish_min_step: float = 1e-9
    sweep_params: GridParams = GridParams(dx=0.02, quad_density=0.5)
    search_params: GridParams = GridParams(dx=0.02, quad_density=0.7)
    report_params: GridParams = GridParams()


def _descend(mixture, ansatz, theta0, settings):
    coarse = Objective(mixture, ansatz, settings.sweep_params)
    theta, _, conv1 = coordinate_sweeps(coarse, np.asarray(theta0, dtype=float), settings.tol_x,
                                        settings.tol_f, settings.max_sweeps)
    obj = Objective(mixture, ansatz, settings.search_params)
    theta, fx, conv2 = pattern_search(obj, theta, obj(theta), min_step=settings.polish_min_step)
    return theta, fx, conv1 and conv2, coarse.calls + obj.calls


def _run_restart(args):
    mixture, K, rid, kind, theta0, settings = args
    ansatz = RSBAnsatz(K)
    theta, fx, conv, calls = _descend(mixture, ansatz, theta0, settings)
    mu = canonical(ansatz.decode(theta))
    if mu.size < K:
        # merged atoms: retry once from a split of the endpoint
        theta2, fx2, conv2, calls2 = _descend(mixture, ansatz, _padded_start(ansatz, mu), settings)
        calls += calls2
        if fx2 < fx:
            theta, fx, conv = theta2, fx2, conv2
            mu = canonical(ansatz.decode(theta))
    report = free_energy(mixture, mu, settings.report_params)
    return RestartRecord(rid, kind, theta, mu, fx, report, conv, calls)


def minimize(mixture: MixtureSpec, K: int, restarts: int = 4, seed: int = 0,
             settings: SearchSettings | None = None, workers: int = 1) -> MinimizeResult:
    """Minimize log 2 + P(mu) - linear term over measures with at most K atoms.

    Every restart runs coordinate-wise golden-section sweeps followed by a
    pattern-search polish; all endpoints are kept for :func:`uniqueness_check`.
    """
    if K < 1:
        raise DomainError(f"K must be >= 1, got {K}")
    if restarts < 1:
        raise DomainError(f"restarts must be >= 1, got {restarts}")
    settings = settings or SearchSettings()
    rng = np.random.default_rng(seed)
    jobs = [(mixture, K, i, kind, th, settings)
            for i, (kind, th) in enumerate(initial_points(mixture, K, restarts, rng))]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            records = list(ex.map(_run_restart, jobs))
    else:
        records = [_run_restart(j) for j in jobs]
    best = min(records, key=lambda r: r.value)
    status = "converged" if all(r.converged for r in records) else "max_iter"
    if status != "converged":
        log.warning("some restarts hit the iteration budget; returning best iterate")
    return MinimizeResult(best.measure, best.report, records, status, K)


@dataclass
class UniquenessReport:
    max_pairwise_d: float
    n_compared: int
    excluded: list[int]
    d_tol: float
    status: str

    @property
    def passed(self) -> bool:
        return self.status == "PASS"


def uniqueness_check(restarts: list[RestartRecord], error_budget: float | None = None,
                     d_tol: float = 1e-3) -> UniquenessReport:
    """Max pairwise metric_d among endpoints within 2 x budget of the best value."""
    if error_budget is None:
        error_budget = max(r.report.error_budget for r in restarts)
    best = min(r.value for r in restarts)
    near = [r for r in restarts if r.value <= best + 2.0 * error_budget]
    excluded = [r.restart_id for r in restarts if r not in near]
    if len(near) < 2:
        return UniquenessReport(0.0, len(near), excluded, d_tol, "SKIPPED")
    dmax = max(metric_d(a.measure, b.measure) for a, b in itertools.combinations(near, 2))
    return UniquenessReport(dmax, len(near), excluded, d_tol, "PASS" if dmax <= d_tol else "FAIL")


@dataclass
class ConvexityReport:
    mu0: AtomicMeasure
    mu1: AtomicMeasure
    lambdas: list[float]
    values: list[float]
    endpoint_values: tuple[float, float]
    gaps: list[float]
    tau: float
    s: float
    error_budget: float
    d: float

    @property
    def convex(self) -> bool:
        return min(self.gaps) >= -self.error_budget

    @property
    def strict(self) -> bool:
        return min(self.gaps) > 3.0 * self.error_budget and self.s < self.tau


def convexity_scan(mixture: MixtureSpec, mu0: AtomicMeasure, mu1: AtomicMeasure,
                   lambdas=(0.25, 0.5, 0.75), s: float = 0.0, x0: float | None = None,
                   x1: float | None = None, params: GridParams | None = None) -> ConvexityReport:
    """Gaps (1-l) Phi_0(s, x0) + l Phi_1(s, x1) - Phi_l(s, x_l) along the segment mu_l."""
    params = params or GridParams()
    x0 = mixture.h if x0 is None else x0
    x1 = mixture.h if x1 is None else x1
    coarse = GridParams(2 * params.dx, params.x_max, params.quad_density)
    lambdas = [float(l) for l in lambdas]
    if any(not 0.0 < l < 1.0 for l in lambdas):
        raise DomainError("lambda grid must lie in (0, 1)")

    def phi(mu, x):
        v = float(solution(mixture, mu, params).eval(s, x))
        err = abs(v - float(build_solution(mixture, mu, coarse).eval(s, x)))
        return v, err

    f0, e0 = phi(mu0, x0)
    f1, e1 = phi(mu1, x1)
    errs = [e0, e1]
    vals, gaps = [], []
    for lam in lambdas:
        v, e = phi(mix(mu0, mu1, lam), (1 - lam) * x0 + lam * x1)
        errs.append(e)
        vals.append(v)
        gaps.append((1 - lam) * f0 + lam * f1 - v)
    budget = 2.0 * max(errs) + 1e-9
    return ConvexityReport(mu0, mu1, lambdas, vals, (f0, f1), gaps, last_disagreement(mu0, mu1), s,
                           budget, metric_d(mu0, mu1))
