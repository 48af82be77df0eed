"""Monte Carlo checks of the stochastic-control representation of Phi.

For a control u with |u| <= 1 on [s, t],

    F(u, x) = E[ Phi(t, Y(t)) - 1/2 int_s^t alpha zeta u^2 dr ],
    Y(r) = x + int_s^r alpha zeta u dr' + int_s^r sqrt(zeta) dB,

never exceeds Phi(s, x), with equality for the feedback u*(r) = d_x Phi(r, Y(r)).

Time stepping holds the control constant on each step [r_i, r_{i+1}) and
uses increments that are exact in law for that piecewise-constant control:
the drift gets u_i times the integral of alpha zeta over the step and the
noise has variance xi'(r_{i+1}) - xi'(r_i). A discretized control is then
itself admissible, so dominance holds with no time-step bias; only the
optimal feedback carries an O(dr) deficit, measured by step halving.

All controls compared in one experiment see the same Gaussian draws.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, NumericalError, ValidationError
from .measure import distribution
from .pde import SNAP, GridSolution, gauss_hermite, hermite_interp

KINDS = ("optimal", "constant", "markov")


@dataclass(frozen=True)
class ControlSpec:
    """A control on [s, t]: the optimal feedback, a constant, or a Markov
    feedback g(r, y) given as a table on a (time, state) grid or a callable.

    Values are clamped to [-1, 1]; tables are interpolated bilinearly and held
    constant outside their grid.
    """

    kind: str
    value: float = 0.0
    times: tuple[float, ...] | None = None
    states: tuple[float, ...] | None = None
    table: tuple[tuple[float, ...], ...] | None = None
    func: Callable | None = field(default=None, compare=False)
    label: str = ""

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValidationError(f"unknown control kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "constant" and not -1.0 <= self.value <= 1.0:
            raise ValidationError(f"constant control must lie in [-1, 1], got {self.value}")
        if self.kind == "markov":
            if self.func is None and self.table is None:
                raise ValidationError("markov control needs a table or a callable")
            if self.table is not None:
                tab = np.asarray(self.table, dtype=float)
                if tab.shape != (len(self.times or ()), len(self.states or ())):
                    raise ValidationError("markov table shape must be (len(times), len(states))")
                if np.any(np.diff(self.times) <= 0) or np.any(np.diff(self.states) <= 0):
                    raise ValidationError("markov table grids must be strictly increasing")

    @classmethod
    def optimal(cls) -> "ControlSpec":
        return cls("optimal", label="optimal")

    @classmethod
    def constant(cls, c: float) -> "ControlSpec":
        return cls("constant", value=float(c), label=f"constant({c:.6g})")

    @classmethod
    def from_table(cls, times, states, table, label: str = "markov") -> "ControlSpec":
        return cls("markov", times=tuple(map(float, times)), states=tuple(map(float, states)),
                   table=tuple(tuple(map(float, row)) for row in np.asarray(table, dtype=float)),
                   label=label)

    @classmethod
    def from_callable(cls, g: Callable, label: str = "markov") -> "ControlSpec":
        return cls("markov", func=g, label=label)

    def feedback(self, r: float, y: np.ndarray) -> np.ndarray:
        """u(r) for paths in state y (not for the optimal kind)."""
        if self.kind == "constant":
            return np.full_like(y, self.value)
        if self.kind == "optimal":
            raise DomainError("the optimal control is evaluated through the PDE solution")
        if self.func is not None:
            u = np.asarray(self.func(r, y), dtype=float)
            u = np.broadcast_to(u, y.shape)
        else:
            times = np.asarray(self.times)
            tab = np.asarray(self.table)
            k = int(np.clip(np.searchsorted(times, r, side="right") - 1, 0, max(len(times) - 2, 0)))
            if len(times) == 1:
                u = np.interp(y, self.states, tab[0])
            else:
                w = float(np.clip((r - times[k]) / (times[k + 1] - times[k]), 0.0, 1.0))
                u = (1 - w) * np.interp(y, self.states, tab[k]) + w * np.interp(y, self.states, tab[k + 1])
        return np.clip(u, -1.0, 1.0)


@dataclass(frozen=True)
class BatchParams:
    """Path count, time step, seed and whether to measure the step bias."""

    n_paths: int = 100_000
    dr: float = 1e-3
    seed: int = 0
    richardson: bool = True
    chunk: int = 10_000

    def steps(self, s: float, t: float) -> int:
        return max(1, int(round((t - s) / self.dr)))


@dataclass
class PathBatch:
    """Paths of the optimally controlled SDE.

    Only the states at ``record`` times are kept; storing every step of 10^5
    paths would not fit in memory.
    """

    times: np.ndarray
    seed: int
    x: float
    states: dict[float, np.ndarray]
    drift_integral: np.ndarray
    cost_integral: np.ndarray


@dataclass
class RepresentationReport:
    """Estimate of F(u, x) against Phi(s, x).

    ``allowance`` bounds the time-step bias (twice the largest change under
    step halving; 0 when not measured). ``levels`` lists the estimates at
    dr, dr/2, dr/4 when measured.
    """

    label: str
    estimate: float
    se: float
    reference: float
    allowance: float
    n_paths: int
    dr: float
    levels: tuple[float, ...] = ()

    @property
    def gap(self) -> float:
        return self.estimate - self.reference

    @property
    def z(self) -> float:
        return self.gap / self.se if self.se > 0 else math.copysign(math.inf, self.gap) if self.gap else 0.0

    def equality_holds(self, k: float = 3.0) -> bool:
        return abs(self.gap) <= k * self.se + self.allowance

    def dominated(self, k: float = 3.0) -> bool:
        return self.gap <= k * self.se + self.allowance

    def row(self) -> list:
        return [self.label, self.estimate, self.se, self.reference, self.z]


# --- simulation engine ---------------------------------------------------------


def _window_check(sol: GridSolution, s: float, t: float, M: int) -> None:
    if not 0.0 <= s < t <= 1.0:
        raise DomainError(f"need 0 <= s < t <= 1, got s={s}, t={t}")
    if M < 100:
        raise ConfigurationError(f"need at least 100 time steps, got {M}")
    zeta1 = float(sol.mixture.zeta(1.0))
    if (t - s) / M * zeta1 > 0.01 + 1e-12:
        raise ConfigurationError(f"dr * zeta(1) = {(t - s) / M * zeta1:.4g} exceeds 0.01")


def drift_weight(sol: GridSolution, a, b):
    """Integral of alpha(r) zeta(r) over [a, b], exact per piece of alpha."""
    xp = sol.mixture.xi_prime
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    total = np.zeros(np.broadcast(a, b).shape)
    for lo, hi, v in distribution(sol.measure).pieces():
        if v > 0:
            left = np.clip(a, lo, hi)
            right = np.clip(b, lo, hi)
            total += v * (xp(right) - xp(left))
    return total if total.ndim else float(total)


class _Field:
    """Derivatives of Phi(r, .) at path states via local tables.

    Off the closed-form interval a table of Phi(r, .) is built on a grid of
    spacing ``dx`` covering the states, then Hermite-interpolated.
    """

    def __init__(self, sol: GridSolution, dx: float = 0.01):
        self.sol = sol
        self.dx = dx

    def __call__(self, r: float, y: np.ndarray, orders: Sequence[int]) -> list[np.ndarray]:
        sol = self.sol
        if r >= sol.top_start - SNAP:
            return [np.asarray(sol.eval(r, y, j)) for j in orders]
        dx = self.dx
        i0 = math.floor(float(y.min()) / dx) - 2
        i1 = math.ceil(float(y.max()) / dx) + 2
        xg = np.arange(i0, i1 + 1) * dx
        rows = list(range(min(orders), max(orders) + 2))
        full = np.zeros((max(rows) + 1, xg.size))
        full[rows] = sol.slice_table(r, xg, rows)
        return hermite_interp(full, float(xg[0]), dx, math.inf, y, orders)


class _Track:
    """State of one control at one time resolution."""

    def __init__(self, control, x: float, n: int, level: int, keep_drift: bool = False):
        self.control = control  # ControlSpec or ("combo", i0, i1, lam)
        self.level = level
        self.y = np.full(n, float(x))
        self.drift = np.zeros(n) if keep_drift else None
        self.cost = np.zeros(n)
        self.u = np.zeros(n)
        self.diff2 = np.zeros(n)


class _Engine:
    def __init__(self, sol: GridSolution, s: float, t: float, x: float, M: int, n_paths: int,
                 seed: int, levels: int = 1, chunk: int = 10_000):
        _window_check(sol, s, t, M)
        if n_paths < 2:
            raise ConfigurationError("need at least 2 paths")
        self.sol, self.s, self.t, self.x = sol, s, t, float(x)
        self.M, self.levels, self.n = M, levels, n_paths
        self.fine = M * 2 ** (levels - 1)
        self.times = s + (t - s) * np.arange(self.fine + 1) / self.fine
        self.times[-1] = t
        xp = sol.mixture.xi_prime
        self.var = np.diff(xp(self.times))
        self.field = _Field(sol)
        sizes = [min(chunk, n_paths - k) for k in range(0, n_paths, chunk)]
        self._gens = [np.random.Generator(np.random.PCG64(ss))
                      for ss in np.random.SeedSequence(seed).spawn(len(sizes))]
        self._sizes = sizes
        self.weights = {}
        for lev in range(levels):
            stride = 2 ** (levels - 1 - lev)
            grid = self.times[::stride]
            self.weights[lev] = drift_weight(sol, grid[:-1], grid[1:])

    def _normals(self) -> np.ndarray:
        return np.concatenate([g.standard_normal(k) for g, k in zip(self._gens, self._sizes)])

    def run(self, tracks: list[_Track], on_step: Callable | None = None) -> None:
        """Advance all tracks to t. ``on_step(k, r)`` is called before fine step k
        (and with k = fine at the end)."""
        noise = {lev: np.zeros(self.n) for lev in range(self.levels)}
        for k in range(self.fine):
            r = float(self.times[k])
            if on_step is not None:
                on_step(k, r)
            dW = math.sqrt(max(self.var[k], 0.0)) * self._normals()
            for lev in range(self.levels):
                stride = 2 ** (self.levels - 1 - lev)
                if k % stride == 0:
                    self._controls(tracks, lev, r, k // stride)
                noise[lev] += dW
                if (k + 1) % stride == 0:
                    i = k // stride
                    a = self.weights[lev][i]
                    for tr in tracks:
                        if tr.level == lev:
                            au = a * tr.u
                            tr.y += au
                            tr.y += noise[lev]
                            if tr.drift is not None:
                                tr.drift += au
                            au *= tr.u
                            tr.cost += au
                    noise[lev][:] = 0.0
        for tr in tracks:
            bad = ~np.isfinite(tr.y)
            if bad.any():
                raise NumericalError(f"non-finite state on path {int(np.argmax(bad))}")
        if on_step is not None:
            on_step(self.fine, self.t)

    def _controls(self, tracks, lev, r, i):
        active = [tr for tr in tracks if tr.level == lev]
        opt = [tr for tr in active if isinstance(tr.control, ControlSpec) and tr.control.kind == "optimal"]
        if opt:
            ys = np.concatenate([tr.y for tr in opt])
            u = self.field(r, ys, [1])[0]
            for j, tr in enumerate(opt):
                tr.u = u[j * self.n:(j + 1) * self.n]
        for tr in active:
            if isinstance(tr.control, ControlSpec):
                if tr.control.kind != "optimal":
                    tr.u = tr.control.feedback(r, tr.y)
                    if tr.control.kind == "markov" and not np.all(np.isfinite(tr.u)):
                        bad = int(np.argmax(~np.isfinite(tr.u)))
                        raise NumericalError(f"non-finite control on path {bad} at r={r}")
        dt = float(self.times[min((i + 1) * 2 ** (self.levels - 1 - lev), self.fine)] - r)
        for tr in active:
            if not isinstance(tr.control, ControlSpec):
                _, i0, i1, lam = tr.control
                u0, u1 = tracks[i0].u, tracks[i1].u
                tr.u = (1 - lam) * u0 + lam * u1
                tr.diff2 += (u0 - u1) ** 2 * dt

    def payoff(self, tr: _Track) -> np.ndarray:
        """Per-path C - L."""
        c = self.field(self.t, tr.y, [0])[0]
        return c - 0.5 * tr.cost


def _mean_se(v: np.ndarray) -> tuple[float, float]:
    return float(np.mean(v)), float(np.std(v, ddof=1) / math.sqrt(v.size))


def simulate_sde(sol: GridSolution, s: float, t: float, x: float, M: int, N: int, seed: int,
                 record: Sequence[float] = ()) -> PathBatch:
    """Paths of dX = alpha zeta d_x Phi(r, X) dr + sqrt(zeta) dB, X(s) = x.

    States are kept at t and at the grid times nearest to ``record``.
    """
    eng = _Engine(sol, s, t, x, M, N, seed)
    tr = _Track(ControlSpec.optimal(), x, N, 0, keep_drift=True)
    keep = {int(round((r - s) / (t - s) * M)) for r in record} | {M}
    states: dict[float, np.ndarray] = {}

    def on_step(k, r):
        if k in keep:
            states[float(eng.times[k])] = tr.y.copy()

    eng.run([tr], on_step)
    return PathBatch(eng.times, seed, float(x), states, tr.drift, tr.cost)


def evaluate_objective(sol: GridSolution, control: ControlSpec, s: float, t: float, x: float,
                       batch: BatchParams | None = None) -> RepresentationReport:
    """Estimate F(u, x) and compare with Phi(s, x).

    With ``batch.richardson`` the run is repeated at dr/2 and dr/4 on the same
    Brownian paths; the allowance is twice the largest change.
    """
    return evaluate_controls(sol, [control], s, t, x, batch)[0]


def evaluate_controls(sol: GridSolution, controls: Sequence[ControlSpec], s: float, t: float,
                      x: float, batch: BatchParams | None = None) -> list[RepresentationReport]:
    """:func:`evaluate_objective` for several controls on common paths."""
    batch = batch or BatchParams()
    M = batch.steps(s, t)
    levels = 3 if batch.richardson else 1
    eng = _Engine(sol, s, t, x, M, batch.n_paths, batch.seed, levels, batch.chunk)
    tracks = [_Track(c, x, batch.n_paths, lev) for c in controls for lev in range(levels)]
    eng.run(tracks)
    ref = float(sol.eval(s, x))
    out = []
    for j, c in enumerate(controls):
        vals = [eng.payoff(tracks[j * levels + lev]) for lev in range(levels)]
        est, se = _mean_se(vals[0])
        means = tuple(float(np.mean(v)) for v in vals)
        allowance = 2.0 * max((abs(a - b) for a, b in zip(means, means[1:])), default=0.0)
        out.append(RepresentationReport(c.label or c.kind, est, se, ref, allowance, batch.n_paths,
                                        (t - s) / M, means if levels > 1 else ()))
    return out


@dataclass
class DominanceReport:
    reports: list[RepresentationReport]
    allowance: float

    @property
    def max_violation_z(self) -> float:
        """Largest (estimate - Phi - allowance) / SE over the controls."""
        return max((r.gap - self.allowance) / r.se for r in self.reports)

    @property
    def passed(self) -> bool:
        return all(r.gap <= 3.0 * r.se + self.allowance for r in self.reports)


def verify_dominance(sol: GridSolution, controls: Sequence[ControlSpec], s: float, t: float,
                     x: float, batch: BatchParams | None = None,
                     allowance: float | None = None) -> DominanceReport:
    """Check F(u, x) <= Phi(s, x) + 3 SE + allowance for every control.

    All controls share one batch of paths. The allowance defaults to the step
    bias measured on the optimal control by halving.
    """
    batch = batch or BatchParams()
    single = BatchParams(batch.n_paths, batch.dr, batch.seed, False, batch.chunk)
    reports = evaluate_controls(sol, controls, s, t, x, single)
    if allowance is None:
        opt = evaluate_objective(sol, ControlSpec.optimal(), s, t, x,
                                 BatchParams(batch.n_paths, batch.dr, batch.seed, True, batch.chunk))
        allowance = opt.allowance
    for r in reports:
        r.allowance = allowance
    return DominanceReport(reports, allowance)


def random_controls(n: int, rng: np.random.Generator, s: float = 0.0, t: float = 1.0) -> list[ControlSpec]:
    """Alternating random constants and tabulated feedbacks a + b tanh(c y + d r)."""
    out = []
    times = np.linspace(s, t, 11)
    states = np.linspace(-4.0, 4.0, 81)
    for k in range(n):
        if k % 2 == 0:
            out.append(ControlSpec.constant(float(rng.uniform(-1.0, 1.0))))
        else:
            a, b = rng.uniform(-0.5, 0.5), rng.uniform(-1.0, 1.0)
            c, d = rng.uniform(0.2, 3.0), rng.uniform(-1.0, 1.0)
            tab = np.clip(a + b * np.tanh(c * states[None, :] + d * times[:, None]), -1.0, 1.0)
            out.append(ControlSpec.from_table(times, states, tab, label=f"feedback{k}"))
    return out


# --- Ito identities --------------------------------------------------------------


@dataclass
class WindowIdentity:
    a: float
    b: float
    slope_change: float
    slope_se: float
    curvature_change: float
    curvature_drift: float
    identity_se: float

    @property
    def martingale_z(self) -> float:
        return self.slope_change / self.slope_se if self.slope_se > 0 else 0.0

    @property
    def identity_z(self) -> float:
        gap = self.curvature_change + self.curvature_drift
        return gap / self.identity_se if self.identity_se > 0 else 0.0


@dataclass
class ItoReport:
    windows: list[WindowIdentity]
    n_paths: int
    dr: float

    @property
    def passed(self) -> bool:
        return all(abs(w.martingale_z) <= 3.0 and abs(w.identity_z) <= 3.0 for w in self.windows)


def nested_windows(s: float, t: float, n: int = 5) -> list[tuple[float, float]]:
    """n windows shrinking symmetrically from [s, t]."""
    L = t - s
    return [(s + k * L / (2 * n), t - k * L / (2 * n)) for k in range(n)]


def verify_ito_identities(sol: GridSolution, s: float, t: float, x: float,
                          windows: Sequence[tuple[float, float]] | None = None,
                          batch: BatchParams | None = None) -> ItoReport:
    """Along the optimal path X, for each window [a, b]:

    (i) E d_xPhi(b, X(b)) = E d_xPhi(a, X(a)), and
    (ii) E d_xxPhi(b, X(b)) - E d_xxPhi(a, X(a)) = -E int_a^b alpha zeta (d_xxPhi)^2 dr,

    each tested by a z-score of the per-path difference. Window ends are
    snapped to the time grid.
    """
    batch = batch or BatchParams()
    windows = list(windows) if windows is not None else nested_windows(s, t)
    for a, b in windows:
        if not s <= a <= b <= t:
            raise DomainError(f"window ({a}, {b}) not inside [{s}, {t}]")
    M = batch.steps(s, t)
    eng = _Engine(sol, s, t, x, M, batch.n_paths, batch.seed, 1, batch.chunk)
    tr = _Track(ControlSpec.optimal(), x, batch.n_paths, 0)
    idx = lambda r: int(round((r - s) / (t - s) * M))
    probes = {idx(r) for w in windows for r in w}
    d1: dict[int, np.ndarray] = {}
    d2: dict[int, np.ndarray] = {}
    integral: dict[int, np.ndarray] = {}
    acc = np.zeros(batch.n_paths)

    def on_step(k, r):
        nonlocal acc
        u, c = eng.field(r, tr.y, [1, 2])
        if k in probes:
            d1[k], d2[k], integral[k] = u.copy(), c.copy(), acc.copy()
        if k < M:
            acc = acc + eng.weights[0][k] * c * c

    eng.run([tr], on_step)
    out = []
    for a, b in windows:
        ka, kb = idx(a), idx(b)
        du = d1[kb] - d1[ka]
        dc = d2[kb] - d2[ka]
        drift = integral[kb] - integral[ka]
        m1, se1 = _mean_se(du)
        _, se2 = _mean_se(dc + drift)
        out.append(WindowIdentity(float(eng.times[ka]), float(eng.times[kb]), m1, se1,
                                  float(np.mean(dc)), float(np.mean(drift)), se2))
    return ItoReport(out, batch.n_paths, (t - s) / M)


# --- concavity in the control ------------------------------------------------------


@dataclass
class ConcavityReport:
    drift_mass: float
    lambdas: list[float]
    values: list[float]
    endpoint_values: tuple[float, float]
    gaps: list[float]
    gap_se: list[float]
    control_distance: float

    @property
    def condition_holds(self) -> bool:
        """Whether int alpha zeta dr < 1 on the window."""
        return self.drift_mass < 1.0

    @property
    def concave(self) -> bool:
        return all(g >= -3.0 * se for g, se in zip(self.gaps, self.gap_se))

    @property
    def strict(self) -> bool:
        return all(g > 3.0 * se for g, se in zip(self.gaps, self.gap_se))


def verify_concavity(sol: GridSolution, u0: ControlSpec, u1: ControlSpec, s: float, t: float,
                     x: float, lambdas: Sequence[float] = (0.25, 0.5, 0.75),
                     batch: BatchParams | None = None) -> ConcavityReport:
    """Gaps F(u_l) - (1-l) F(u0) - l F(u1) for u_l = (1-l) u0 + l u1.

    The mixed control is formed from the two controls' values along their
    own paths, so it is adapted. ``control_distance`` estimates
    (E int (u0 - u1)^2 dr)^(1/2).
    """
    batch = batch or BatchParams()
    lambdas = [float(l) for l in lambdas]
    M = batch.steps(s, t)
    eng = _Engine(sol, s, t, x, M, batch.n_paths, batch.seed, 1, batch.chunk)
    tracks = [_Track(u0, x, batch.n_paths, 0), _Track(u1, x, batch.n_paths, 0)]
    tracks += [_Track(("combo", 0, 1, lam), x, batch.n_paths, 0) for lam in lambdas]
    eng.run(tracks)
    p0, p1 = eng.payoff(tracks[0]), eng.payoff(tracks[1])
    values, gaps, ses = [], [], []
    for lam, tr in zip(lambdas, tracks[2:]):
        p = eng.payoff(tr)
        g, se = _mean_se(p - (1 - lam) * p0 - lam * p1)
        values.append(float(np.mean(p)))
        gaps.append(g)
        ses.append(se)
    dist = math.sqrt(float(np.mean(tracks[2].diff2))) if lambdas else 0.0
    mass = float(drift_weight(sol, s, t))
    return ConcavityReport(mass, lambdas, values, (float(np.mean(p0)), float(np.mean(p1))),
                           gaps, ses, dist)


# --- Gaussian three-function inequality --------------------------------------------------


@dataclass
class GaussianInequalityReport:
    lambdas: list[float]
    lhs: list[float]
    rhs: list[float]

    @property
    def margins(self) -> list[float]:
        return [r - l for l, r in zip(self.lhs, self.rhs)]

    def passed(self, tol: float = 1e-12) -> bool:
        return all(m >= -tol * max(1.0, abs(r)) for m, r in zip(self.margins, self.rhs))


def verify_gaussian_inequality(F: Callable, G: Callable, H: Callable, m0: float, m1: float,
                               lambdas: Sequence[float] = (0.25, 0.5, 0.75), nodes: int = 200,
                               spot: int = 100, span: float = 5.0, seed: int = 0) -> GaussianInequalityReport:
    """(E F(z)^{m_l})^{1/m_l} against (E G(z)^{m0})^{(1-l)/m0} (E H(z)^{m1})^{l/m1}.

    The hypothesis F((1-l)x + l y) <= G(x)^(1-l) H(y)^l is spot-checked on a
    ``spot`` x ``spot`` random sample of [-span, span]^2 for every l; a
    violation rejects the input.
    """
    if m0 <= 0 or m1 <= 0:
        raise DomainError("exponents m0, m1 must be positive")
    lambdas = [float(l) for l in lambdas]
    if any(not 0.0 <= l <= 1.0 for l in lambdas):
        raise DomainError("lambda grid must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    xs = rng.uniform(-span, span, spot)[:, None]
    ys = rng.uniform(-span, span, spot)[None, :]
    gx = np.asarray(G(xs), dtype=float)
    hy = np.asarray(H(ys), dtype=float)
    for lam in lambdas:
        lhs = np.asarray(F((1 - lam) * xs + lam * ys), dtype=float)
        rhs = gx ** (1 - lam) * hy ** lam
        if np.any(lhs < 0) or np.any(lhs > rhs * (1 + 1e-12) + 1e-300):
            raise ValidationError(f"hypothesis F((1-l)x + l y) <= G(x)^(1-l) H(y)^l fails at l={lam}")
    z, w = gauss_hermite(nodes)
    eg = float(np.asarray(G(z), dtype=float) ** m0 @ w) ** (1 / m0)
    eh = float(np.asarray(H(z), dtype=float) ** m1 @ w) ** (1 / m1)
    left, right = [], []
    for lam in lambdas:
        ml = (1 - lam) * m0 + lam * m1
        left.append(float(np.asarray(F(z), dtype=float) ** ml @ w) ** (1 / ml))
        right.append(eg ** (1 - lam) * eh ** lam)
    return GaussianInequalityReport(lambdas, left, right)


def write_reports_csv(path, reports: Sequence[RepresentationReport]) -> None:
    """CSV with columns quantity, estimate, se, reference, z."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["quantity", "estimate", "se", "reference", "z"])
        for r in reports:
            wr.writerow([r.label] + [f"{v:.17g}" for v in r.row()[1:]])
