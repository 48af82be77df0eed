"""Parisi PDE solution for atomic measures by backward Gaussian smoothing.

Between consecutive atoms q_l < q_{l+1} of mu, with m = mu([0, q_l]),

    Phi(s, x) = (1/m) log E exp(m Phi(q_{l+1}, x + z sqrt(xi'(q_{l+1}) - xi'(s))))

and on the last interval (where mu([0, s]) = 1) the closed form
log cosh x + (xi'(1) - xi'(s)) / 2 holds. Expectations over the standard
Gaussian z use a truncated trapezoid rule (see :func:`gaussian_rule`);
values of the level above at the quadrature abscissae come from cubic Hermite interpolation of the stored
tables (value plus first derivative), with a slope-one linear tail outside
[-x_max, x_max].

x-derivatives are propagated through the tilted expectation:

    d1 = E_p[A1]
    d2 = E_p[A2] + m Var_p(A1)
    d3 = E_p[A3] + 3 m Cov_p(A1, A2) + m^2 E_p[(A1 - E_p A1)^3]

where A_j are the derivatives of the level above at x + sigma z and p is
the weight proportional to w_k exp(m A0_k).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from .errors import ConfigurationError, DomainError, NumericalError
from .measure import AtomicMeasure, distribution
from .mixture import MixtureSpec

M_ZERO = 1e-12
SNAP = 1e-12
LOG2 = math.log(2.0)


@dataclass(frozen=True)
class GridParams:
    """Spatial grid and quadrature settings.

    ``x_max=None`` selects ``|h| + max(8 sqrt(xi'(1)), 12)``.
    ``quad_density`` scales the number of Gaussian quadrature nodes.
    """

    dx: float = 0.005
    x_max: float | None = None
    quad_density: float = 1.0

    def refined(self, factor: float = 0.5) -> "GridParams":
        return GridParams(self.dx * factor, self.x_max, self.quad_density)

    def resolve_x_max(self, mixture: MixtureSpec) -> float:
        sigma = math.sqrt(float(mixture.xi_prime(1.0)))
        if self.x_max is None:
            return abs(mixture.h) + max(8.0 * sigma, 12.0)
        if self.x_max < abs(mixture.h) + 6.0 * sigma:
            raise ConfigurationError(
                f"x_max={self.x_max} is below |h| + 6 sqrt(xi'(1)) = {abs(mixture.h) + 6 * sigma:.6g}"
            )
        return float(self.x_max)


@lru_cache(maxsize=None)
def gauss_hermite(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and probability weights for E f(z), z ~ N(0, 1)."""
    z, w = hermegauss(n)
    return z, w / w.sum()


@lru_cache(maxsize=4096)
def gaussian_rule(sigma: float, density: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Truncated trapezoid rule for E f(x + sigma z), z ~ N(0, 1).

    log cosh is singular at +-i pi/2, so the integrand in z is analytic only
    in a strip of half-width pi/(2 sigma); the trapezoid error then decays
    like exp(-pi^2 / (sigma * spacing)). Spacing 0.3/sigma keeps it near
    1e-14. The range 9 + sigma covers an exponential tilt of slope <= 1.
    """
    spacing = min(0.25, 0.3 / max(sigma, 1e-300)) / density
    half = 9.0 + sigma
    k = int(math.ceil(half / spacing))
    z = np.arange(-k, k + 1) * spacing
    w = np.exp(-0.5 * z * z)
    return z, w / w.sum()


# --- closed form on the top interval -------------------------------------


def log_cosh(x):
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - LOG2


def _sech2(x):
    e = np.exp(-2.0 * np.abs(x))
    return 4.0 * e / (1.0 + e) ** 2


def closed_form(x, offset: float, order: int):
    """Derivative of log cosh x + offset of the given order (0..4)."""
    if order == 0:
        return log_cosh(x) + offset
    t = np.tanh(x)
    if order == 1:
        return t
    s2 = _sech2(x)
    if order == 2:
        return s2
    if order == 3:
        return -2.0 * t * s2
    if order == 4:
        return -2.0 * s2 * (s2 - 2.0 * t * t)
    raise DomainError(f"derivative order {order} not available")


# --- tabulated slices -------------------------------------------------------


class _Slice:
    """Phi(s, .) either in closed form or as tables d0..d4 on the x grid."""

    __slots__ = ("s", "offset", "table", "x0", "dx", "x_max")

    def __init__(self, s, offset=None, table=None, x0=0.0, dx=1.0, x_max=np.inf):
        self.s = s
        self.offset = offset
        self.table = table
        self.x0 = x0
        self.dx = dx
        self.x_max = x_max

    @property
    def analytic(self) -> bool:
        return self.table is None

    def evaluate(self, y: np.ndarray, orders: Sequence[int]) -> list[np.ndarray]:
        if self.analytic:
            return [closed_form(y, self.offset, j) for j in orders]
        return hermite_interp(self.table, self.x0, self.dx, self.x_max, y, orders)


def hermite_interp(table, x0, dx, x_max, y, orders):
    """Cubic Hermite interpolation of ``table[j]`` using ``table[j+1]`` as slope.

    Outside [-x_max, x_max]: order 0 extends linearly with slope +-1, order 1
    is +-1, higher orders take the boundary value.
    """
    y = np.asarray(y, dtype=float)
    n = table.shape[1]
    u = (y - x0) / dx
    i = np.clip(np.floor(u), 0, n - 2).astype(np.intp)
    t = np.clip(u - i, 0.0, 1.0)
    t2 = t * t
    t3 = t2 * t
    h00 = 2 * t3 - 3 * t2 + 1
    h10 = (t3 - 2 * t2 + t) * dx
    h01 = -2 * t3 + 3 * t2
    h11 = (t3 - t2) * dx
    out = []
    right = y > x_max
    left = y < -x_max
    for j in orders:
        f, g = table[j], table[j + 1]
        v = h00 * f[i] + h10 * g[i] + h01 * f[i + 1] + h11 * g[i + 1]
        if right.any() or left.any():
            if j == 0:
                v = np.where(right, f[-1] + (y - x_max), v)
                v = np.where(left, f[0] + (-x_max - y), v)
            elif j == 1:
                v = np.where(right, 1.0, np.where(left, -1.0, v))
            else:
                v = np.where(right, f[-1], np.where(left, f[0], v))
        out.append(v)
    return out


def tilted_log_mean(v: np.ndarray, w: np.ndarray, m: float) -> np.ndarray:
    """(1/m) log sum_k w_k exp(m v_k) along the last axis, for 0 < m <= 1.

    Written as E v + (1/m) log1p(E expm1(m (v - E v))) so that small m does
    not lose the 1/m-amplified rounding of a logarithm near 1; large
    exponents fall back to the max-shifted form.
    """
    w = w / w.sum()
    mean = v @ w
    d = m * (v - mean[..., None])
    with np.errstate(over="ignore", invalid="ignore"):
        small = mean + np.log1p(np.expm1(d) @ w) / m
    top = v.max(axis=-1)
    big = top + np.log(np.exp(m * (v - top[..., None])) @ w) / m
    return np.where(d.max(axis=-1) < 300.0, small, big)


def smooth(above: _Slice, m: float, var: float, x: np.ndarray, orders: Sequence[int],
           density: float = 1.0) -> list[np.ndarray]:
    """One step of the backward recursion evaluated at the points ``x``.

    Returns Phi and the requested x-derivatives (orders among 0..3) at the
    lower time, given the slice ``above``, the tilt ``m`` and the Gaussian
    variance ``var``.
    """
    sigma = math.sqrt(max(var, 0.0))
    z, w = gaussian_rule(round(sigma, 14), density)
    x = np.asarray(x, dtype=float)
    y = x[..., None] + sigma * z
    need = sorted({0, *range(0, max(orders) + 1)})
    a = dict(zip(need, above.evaluate(y, need)))
    out: dict[int, np.ndarray] = {}
    if m <= M_ZERO:
        for j in orders:
            out[j] = a[j] @ w
        return [out[j] for j in orders]

    logp = m * a[0]
    top = logp.max(axis=-1, keepdims=True)
    p = w * np.exp(logp - top)
    total = p.sum(axis=-1, keepdims=True)
    p = p / total
    if not np.all(np.isfinite(p)):
        raise NumericalError("non-finite tilted weights in quadrature")
    out[0] = tilted_log_mean(a[0], w, m)
    if max(orders) >= 1:
        mean1 = np.sum(p * a[1], axis=-1)
        out[1] = mean1
    if max(orders) >= 2:
        c1 = a[1] - mean1[..., None]
        var1 = np.sum(p * c1 * c1, axis=-1)
        out[2] = np.sum(p * a[2], axis=-1) + m * var1
    if max(orders) >= 3:
        c2 = a[2] - np.sum(p * a[2], axis=-1, keepdims=True)
        out[3] = (np.sum(p * a[3], axis=-1) + 3 * m * np.sum(p * c1 * c2, axis=-1)
                  + m * m * np.sum(p * c1 ** 3, axis=-1))
    return [out[j] for j in orders]


def _centered_diff(f: np.ndarray, dx: float) -> np.ndarray:
    return np.gradient(f, dx, edge_order=2)


@dataclass
class RegularityReport:
    max_abs_d1: float
    min_d2: float
    max_d2: float
    max_abs_d3: float
    min_second_difference: float
    curvature_constant: float
    n_slices: int

    def checks(self, tol_d1=1e-8, tol_d2=1e-6, tol_d3=1e-3, tol_convex=1e-12) -> dict[str, tuple[bool, float]]:
        """``name -> (passed, margin)``; margin > 0 means satisfied."""
        return {
            "gradient_bound": (self.max_abs_d1 <= 1 + tol_d1, 1 + tol_d1 - self.max_abs_d1),
            "curvature_positive": (self.min_d2 > 0, self.min_d2),
            "curvature_bound": (self.max_d2 <= 1 + tol_d2, 1 + tol_d2 - self.max_d2),
            "third_derivative_bound": (self.max_abs_d3 <= 4 + tol_d3, 4 + tol_d3 - self.max_abs_d3),
            "convex_in_x": (self.min_second_difference >= -tol_convex,
                            self.min_second_difference + tol_convex),
        }


@dataclass
class GridSolution:
    """Phi_mu and its x-derivatives on an (s, x) grid.

    Built by :func:`build_solution`; treat as immutable. ``knots`` holds the
    times with stored tables (atoms below the top interval plus requested
    extra times); times in the top interval are served in closed form.
    """

    mixture: MixtureSpec
    measure: AtomicMeasure
    params: GridParams
    x: np.ndarray
    breaks: np.ndarray
    alphas: np.ndarray
    top_start: float
    slices: dict = field(repr=False)

    @property
    def dx(self) -> float:
        return self.params.dx

    @property
    def x_max(self) -> float:
        return float(self.x[-1])

    @property
    def knots(self) -> list[float]:
        return sorted(self.slices)

    def alpha(self, s):
        return distribution(self.measure)(s)

    def _interval(self, s: float) -> int:
        i = int(np.searchsorted(self.breaks, s, side="right")) - 1
        return min(max(i, 0), len(self.breaks) - 2)

    def _knot_slice(self, s: float) -> _Slice | None:
        for k, sl in self.slices.items():
            if abs(k - s) <= SNAP:
                return sl
        return None

    def _top_slice(self, s: float) -> _Slice:
        xp = self.mixture.xi_prime
        return _Slice(s, offset=0.5 * (float(xp(1.0)) - float(xp(s))))

    def _slice_at(self, s: float) -> _Slice:
        """Stored or closed-form slice at a level boundary or stored knot."""
        if s >= self.top_start - SNAP:
            return self._top_slice(min(max(s, self.top_start), 1.0))
        sl = self._knot_slice(s)
        if sl is None:
            raise DomainError(f"no stored slice at s={s}")
        return sl

    def eval(self, s: float, x, j: int = 0):
        """Phi or its j-th x-derivative (j = 0..3) at time s and points x."""
        if j not in (0, 1, 2, 3):
            raise DomainError(f"derivative order must be 0..3, got {j}")
        if not 0.0 <= s <= 1.0:
            raise DomainError(f"s must lie in [0, 1], got {s}")
        xa = np.asarray(x, dtype=float)
        if s >= self.top_start - SNAP:
            out = self._top_slice(s).evaluate(xa, [j])[0]
        else:
            sl = self._knot_slice(s)
            if sl is not None:
                out = sl.evaluate(xa, [j])[0]
            else:
                out = self.intra(s, xa, [j])[0]
        return out if np.ndim(out) else float(out)

    def intra(self, s: float, x, orders: Sequence[int]) -> list[np.ndarray]:
        """Interval formula from the level boundary above s (no s-interpolation)."""
        i = self._interval(s)
        above = self.breaks[i + 1]
        xp = self.mixture.xi_prime
        var = float(xp(above)) - float(xp(s))
        return smooth(self._slice_at(above), float(self.alphas[i]), var,
                      np.asarray(x, dtype=float), orders, self.params.quad_density)

    def slice_table(self, s: float, x: np.ndarray | None = None, orders=(0, 1, 2)) -> np.ndarray:
        """Rows ``orders`` of Phi(s, .) on ``x`` (default: the solution grid)."""
        x = self.x if x is None else np.asarray(x, dtype=float)
        if s >= self.top_start - SNAP:
            return np.array(self._top_slice(s).evaluate(x, orders))
        sl = self._knot_slice(s)
        if sl is not None:
            return np.array(sl.evaluate(x, orders))
        return np.array(self.intra(s, x, orders))

    def tables(self) -> Iterable[tuple[float, np.ndarray]]:
        """``(s, [d0, d1, d2, d3])`` for every stored slice and the terminal time."""
        for s in self.knots:
            yield s, self.slices[s].table[:4]
        if self.top_start < 1.0:
            yield self.top_start, np.array(self._top_slice(self.top_start).evaluate(self.x, [0, 1, 2, 3]))
        yield 1.0, np.array(self._top_slice(1.0).evaluate(self.x, [0, 1, 2, 3]))

    def regularity(self, band: float = 2.0) -> RegularityReport:
        """Extremes of the stored tables against the a-priori derivative bounds."""
        d1 = d2max = d3 = 0.0
        d2min = np.inf
        convex = np.inf
        curv = np.inf
        n = 0
        near = np.abs(self.x) <= band
        for _, tab in self.tables():
            n += 1
            d1 = max(d1, float(np.max(np.abs(tab[1]))))
            d2min = min(d2min, float(np.min(tab[2])))
            d2max = max(d2max, float(np.max(tab[2])))
            d3 = max(d3, float(np.max(np.abs(tab[3]))))
            convex = min(convex, float(np.min(np.diff(tab[0], 2))))
            curv = min(curv, float(np.min(tab[2][near] * np.cosh(self.x[near]) ** 2)))
        return RegularityReport(d1, d2min, d2max, d3, convex, curv, n)

    def dump_csv(self, path) -> None:
        """Debug dump with columns s, x, phi, d1, d2, d3."""
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["s", "x", "phi", "d1", "d2", "d3"])
            for s, tab in self.tables():
                for k in range(self.x.size):
                    wr.writerow([f"{s:.17g}", f"{self.x[k]:.17g}"] + [f"{tab[j][k]:.17g}" for j in range(4)])


def _grid(mixture: MixtureSpec, params: GridParams, dx_max: float = 0.02) -> np.ndarray:
    if params.dx <= 0 or params.dx > dx_max:
        raise ConfigurationError(f"dx must lie in (0, {dx_max}], got {params.dx}")
    x_max = params.resolve_x_max(mixture)
    half = int(math.ceil(x_max / params.dx))
    return np.arange(-half, half + 1) * params.dx


def level_structure(mixture: MixtureSpec, mu: AtomicMeasure):
    """Level boundaries 0 = b_0 < ... < b_n = 1, alpha on each interval and
    the start of the closed-form top interval (1.0 when absent)."""
    breaks = np.unique(np.concatenate([[0.0, 1.0], mu.atoms]))
    alphas = np.atleast_1d(distribution(mu)(breaks[:-1])).astype(float)
    top = np.nonzero(alphas >= 1.0 - 1e-12)[0]
    top_start = float(breaks[top[0]]) if top.size else 1.0
    return breaks, alphas, top_start


def build_solution(mixture: MixtureSpec, mu: AtomicMeasure, params: GridParams | None = None,
                   extra_times: Iterable[float] = ()) -> GridSolution:
    """Tabulate Phi_mu and d/dx^j Phi_mu (j <= 3) by the backward recursion.

    Extra times inside an interval are computed directly from the level
    boundary above them, with variance xi'(b_{l+1}) - xi'(s).
    """
    params = params or GridParams()
    if params.quad_density <= 0:
        raise ConfigurationError("quad_density must be positive")
    x = _grid(mixture, params)
    breaks, alphas, top_start = level_structure(mixture, mu)
    sol = GridSolution(mixture, mu, params, x, breaks, alphas, top_start, {})
    x_max = float(x[-1])
    xp = mixture.xi_prime

    def make(s: float, above: _Slice, m: float) -> _Slice:
        var = float(xp(above.s)) - float(xp(s))
        d0, d1, d2 = smooth(above, m, var, x, (0, 1, 2), params.quad_density)
        d3 = _centered_diff(d2, params.dx)
        d4 = _centered_diff(d3, params.dx)
        table = np.vstack([d0, d1, d2, d3, d4])
        if not np.all(np.isfinite(table)):
            raise NumericalError(f"non-finite values building level s={s} (m={m})")
        return _Slice(s, table=table, x0=float(x[0]), dx=params.dx, x_max=x_max)

    # level boundaries below the top interval, from the top down
    for i in range(len(breaks) - 2, -1, -1):
        b = float(breaks[i])
        if b >= top_start - SNAP:
            continue
        sol.slices[b] = make(b, sol._slice_at(float(breaks[i + 1])), float(alphas[i]))

    for s in sorted(set(float(t) for t in extra_times)):
        if not 0.0 <= s <= 1.0:
            raise DomainError(f"extra time {s} outside [0, 1]")
        if s >= top_start - SNAP or sol._knot_slice(s) is not None:
            continue
        i = sol._interval(s)
        sol.slices[s] = make(s, sol._slice_at(float(breaks[i + 1])), float(alphas[i]))
    return sol


def nested_quadrature(mixture: MixtureSpec, mu: AtomicMeasure, x: float,
                      density: float = 1.0, max_points: int = 20_000_000) -> float:
    """Phi_mu(0, x) by nesting the quadrature level by level, without a grid.

    The work is the product of the per-level node counts, so this route is
    only for measures with few atoms.
    """
    breaks, alphas, top_start = level_structure(mixture, mu)
    xp = mixture.xi_prime
    rules = []
    for i in range(len(breaks) - 1):
        if breaks[i] >= top_start - SNAP:
            break
        sigma = math.sqrt(float(xp(breaks[i + 1])) - float(xp(breaks[i])))
        rules.append((sigma,) + gaussian_rule(round(sigma, 14), density))
    if math.prod(len(r[1]) for r in rules) > max_points:
        raise ConfigurationError(f"{len(rules)} nested levels exceed {max_points} points")

    def value(i: int, y: np.ndarray) -> np.ndarray:
        if i == len(rules):
            b = float(breaks[i])
            return log_cosh(y) + 0.5 * (float(xp(1.0)) - float(xp(b)))
        sigma, z, w = rules[i]
        v = value(i + 1, y[..., None] + sigma * z)
        m = float(alphas[i])
        if m <= M_ZERO:
            return v @ w
        return tilted_log_mean(v, w, m)

    return float(value(0, np.asarray(float(x))))


def functional_value(mixture: MixtureSpec, mu: AtomicMeasure, x: float,
                     params: GridParams | None = None) -> float:
    """Phi_mu(0, x) through the grid recursion, skipping the bottom table.

    Cheaper than :func:`build_solution` followed by ``eval``: only value and
    slope are tabulated (the slope's own slope by centered differences), and
    the lowest level is evaluated at the single point ``x``.
    """
    params = params or GridParams()
    grid = _grid(mixture, params, dx_max=0.05)
    breaks, alphas, top_start = level_structure(mixture, mu)
    xp = mixture.xi_prime
    above = _Slice(1.0, offset=0.0)
    for i in range(len(breaks) - 2, -1, -1):
        b = float(breaks[i])
        if b >= top_start - SNAP:
            above = _Slice(b, offset=0.5 * (float(xp(1.0)) - float(xp(b))))
            continue
        var = float(xp(above.s)) - float(xp(b))
        m = float(alphas[i])
        if i == 0:
            return float(smooth(above, m, var, np.asarray([float(x)]), (0,), params.quad_density)[0][0])
        d0, d1 = smooth(above, m, var, grid, (0, 1), params.quad_density)
        d2 = _centered_diff(d1, params.dx)
        table = np.vstack([d0, d1, d2])
        if not np.all(np.isfinite(table)):
            raise NumericalError(f"non-finite values building level s={b} (m={m})")
        above = _Slice(b, table=table, x0=float(grid[0]), dx=params.dx, x_max=float(grid[-1]))
    return float(above.evaluate(np.asarray([float(x)]), (0,))[0][0])


@dataclass
class ResidualStats:
    max_abs: float
    mean_abs: float
    n_points: int


def pde_residual(sol: GridSolution, points: Iterable[tuple[float, float]], ds: float = 1e-4) -> ResidualStats:
    """|d_s Phi + (zeta/2)(d_xx Phi + alpha (d_x Phi)^2)| at interior points.

    d_s Phi is a centered difference of width ``ds``; each point must sit at
    least ``ds`` away from every level boundary.
    """
    res = []
    zeta = sol.mixture.zeta
    for s, x in points:
        i = sol._interval(s)
        if s - ds <= sol.breaks[i] or s + ds >= sol.breaks[i + 1]:
            raise DomainError(f"point s={s} is not interior to an interval of constancy of alpha")
        fp = sol.eval(s + ds, x, 0)
        fm = sol.eval(s - ds, x, 0)
        d1 = sol.eval(s, x, 1)
        d2 = sol.eval(s, x, 2)
        a = float(sol.alphas[i])
        r = (fp - fm) / (2 * ds) + 0.5 * float(zeta(s)) * (d2 + a * d1 * d1)
        res.append(abs(r))
    res = np.asarray(res)
    return ResidualStats(float(res.max()), float(res.mean()), int(res.size))


def interior_points(sol: GridSolution, n: int, rng: np.random.Generator, x_span: float = 3.0,
                    margin: float = 1e-3) -> list[tuple[float, float]]:
    """Random (s, x) points strictly inside intervals of constancy of alpha."""
    lengths = np.diff(sol.breaks) - 2 * margin
    ok = np.nonzero(lengths > 0)[0]
    probs = lengths[ok] / lengths[ok].sum()
    pts = []
    for _ in range(n):
        i = ok[rng.choice(ok.size, p=probs)]
        s = rng.uniform(sol.breaks[i] + margin, sol.breaks[i + 1] - margin)
        x = sol.mixture.h + rng.uniform(-x_span, x_span)
        pts.append((float(s), float(x)))
    return pts


@dataclass
class ConvergenceReport:
    ks: list[int]
    gaps: dict[int, list[float]]

    def shrinking(self, j: int, slack: float = 1e-9) -> bool:
        g = self.gaps[j]
        return all(b <= a + slack for a, b in zip(g, g[1:]))


def convergence_check(mixture: MixtureSpec, sequence: Sequence[AtomicMeasure], target: AtomicMeasure,
                      params: GridParams | None = None, times: Sequence[float] = (0.0, 0.25, 0.5, 0.75),
                      x_span: float = 4.0, labels: Sequence[int] | None = None) -> ConvergenceReport:
    """Sup over a (time, x) grid of |d^j Phi_n - d^j Phi_target| for j = 0, 1, 2."""
    params = params or GridParams()
    ref = build_solution(mixture, target, params)
    xs = ref.x[np.abs(ref.x - mixture.h) <= x_span][::4]
    want = {s: [ref.slice_table(s, xs, (0, 1, 2))] for s in times}
    gaps: dict[int, list[float]] = {0: [], 1: [], 2: []}
    for mu in sequence:
        sol = build_solution(mixture, mu, params)
        g = np.zeros(3)
        for s in times:
            tab = sol.slice_table(s, xs, (0, 1, 2))
            g = np.maximum(g, np.max(np.abs(tab - want[s][0]), axis=1))
        for j in range(3):
            gaps[j].append(float(g[j]))
    ks = list(labels) if labels is not None else [mu.size for mu in sequence]
    return ConvergenceReport(ks, gaps)
