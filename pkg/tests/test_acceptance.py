"""Acceptance suite: one test per criterion, each at its stated tolerance and
within its runtime budget. Every test records a PASS/FAIL line that pytest
prints in an "acceptance criteria" section at the end of the run."""

import json
import math
import time

import numpy as np
import pytest

from parisilab.cli import main as cli_main
from parisilab.control_lab import (BatchParams, ControlSpec, evaluate_controls, nested_windows,
                                   random_controls, verify_concavity, verify_dominance,
                                   verify_ito_identities)
from parisilab.finite_n_oracle import annealed_value, covariance_self_test, exact_free_energy
from parisilab.functional import free_energy, parisi_functional, solution
from parisilab.measure import AtomicMeasure, metric_d
from parisilab.mixture import MixtureSpec
from parisilab.optimizer import convexity_scan, minimize, uniqueness_check
from parisilab.pde import GridParams, build_solution, interior_points, pde_residual

pytestmark = pytest.mark.slow

LOG2 = math.log(2.0)

BOUND_MODELS = [
    MixtureSpec.sk(0.5),
    MixtureSpec.sk(1.5, 0.5),
    MixtureSpec.sk(2.0, -1.0),
    MixtureSpec.from_pairs([(2, 1.0), (3, 0.7)], 0.3),
    MixtureSpec.from_pairs([(3, 1.2)]),
    MixtureSpec.from_pairs([(2, 0.5), (4, 1.0)], 1.0),
]
BOUND_MEASURES = [
    AtomicMeasure.dirac(0.5),
    AtomicMeasure.from_pairs([(0.2, 0.5), (0.8, 0.5)]),
    AtomicMeasure.from_pairs([(0.1, 0.2), (0.5, 0.3), (0.9, 0.5)]),
    AtomicMeasure.from_pairs([(0.3, 0.4), (0.6, 0.3), (1.0, 0.3)]),
]

# Models for the Monte Carlo checks: xi'(1) <= 0.1 keeps Var(C - L) of the
# optimal control below 0.1, so 10^5 paths give SE <= 1e-3.
CONTROL_MODELS = [
    ("sk_two_atom", MixtureSpec.sk(0.2, 0.3), AtomicMeasure.from_pairs([(0.2, 0.3), (0.6, 0.7)])),
    ("sk_dirac0", MixtureSpec.sk(0.22, 0.0), AtomicMeasure.dirac(0.0)),
    ("mixed_2_3", MixtureSpec.from_pairs([(2, 0.15), (3, 0.1)], 0.5),
     AtomicMeasure.from_pairs([(0.3, 0.5), (0.8, 0.5)])),
    ("pure_3", MixtureSpec.from_pairs([(3, 0.18)], -0.4),
     AtomicMeasure.from_pairs([(0.1, 0.2), (0.5, 0.3), (0.9, 0.5)])),
]


def field_sweep(n=20, seed=2024):
    rng = np.random.default_rng(seed)
    return list(zip(rng.uniform(0.1, 2.0, n), rng.uniform(-2.0, 2.0, n)))


def random_measure(rng):
    k = int(rng.integers(1, 4))
    return AtomicMeasure.from_pairs(zip(rng.uniform(0, 1, k), rng.uniform(0.1, 1.0, k)), normalize=True)


def contrary_constant(h):
    """A constant control pointing against the field (or 0.5 at h = 0)."""
    return -0.5 if h > 0 else 0.5


def test_c01_closed_form_top_interval(acceptance):
    t0 = time.time()
    worst = 0.0
    for beta, h in field_sweep():
        m = MixtureSpec.sk(beta, h)
        worst = max(worst, abs(parisi_functional(m, AtomicMeasure.dirac(0.0))
                               - (math.log(math.cosh(h)) + 0.5 * m.xi_prime(1.0))))
    ok = worst <= 1e-9 and time.time() - t0 < 60
    acceptance(1, "closed-form top interval", ok, f"max error {worst:.2e} (tol 1e-9), {time.time() - t0:.1f}s")
    assert ok


def test_c02_annealed_identity(acceptance):
    t0 = time.time()
    worst = 0.0
    for beta, h in field_sweep():
        m = MixtureSpec.sk(beta, h)
        rep = free_energy(m, AtomicMeasure.dirac(0.0))
        worst = max(worst, abs(rep.free_energy - (LOG2 + math.log(math.cosh(h)) + 0.5 * m.xi(1.0))))
    ok = worst <= 1e-9 and time.time() - t0 < 60
    acceptance(2, "annealed identity", ok, f"max error {worst:.2e} (tol 1e-9), {time.time() - t0:.1f}s")
    assert ok


def test_c03_derivative_bounds(acceptance):
    t0 = time.time()
    failures, margins = [], {}
    for i, m in enumerate(BOUND_MODELS):
        for j, mu in enumerate(BOUND_MEASURES):
            # tables at level boundaries plus interior times of each interval
            extra = [0.5 * (a + b) for a, b in zip(mu.atoms[:-1], mu.atoms[1:])] + [0.5 * mu.atoms[0]]
            checks = build_solution(m, mu, extra_times=extra).regularity().checks()
            for name in ("gradient_bound", "curvature_positive", "curvature_bound", "third_derivative_bound"):
                ok, margin = checks[name]
                margins[name] = min(margins.get(name, math.inf), margin)
                if not ok:
                    failures.append((i, j, name, margin))
    ok = not failures and time.time() - t0 < 300
    detail = ", ".join(f"{k} margin {v:.2e}" for k, v in margins.items())
    acceptance(3, "derivative bounds, 6 models x 4 measures", ok, f"{detail}; {time.time() - t0:.0f}s")
    assert ok, failures


def test_c04_pde_residual(acceptance):
    t0 = time.time()
    worst, not_decreasing = 0.0, []
    for i, m in enumerate(BOUND_MODELS):
        for j, mu in enumerate(BOUND_MEASURES):
            base = build_solution(m, mu)
            fine = build_solution(m, mu, GridParams(dx=base.dx / 2))
            pts = interior_points(base, 100, np.random.default_rng(10 * i + j))
            r0 = pde_residual(base, pts, ds=1e-4).max_abs
            # one refinement halves both dx and the time difference width
            r1 = pde_residual(fine, pts, ds=5e-5).max_abs
            worst = max(worst, r0)
            if not r1 < r0:
                not_decreasing.append((i, j, r0, r1))
    ok = worst <= 1e-4 and not not_decreasing and time.time() - t0 < 300
    acceptance(4, "PDE residual", ok, f"max residual {worst:.2e} (tol 1e-4), "
               f"{24 - len(not_decreasing)}/24 decrease under refinement, {time.time() - t0:.0f}s")
    assert ok, not_decreasing


def test_c05_convexity(acceptance):
    t0 = time.time()
    rng = np.random.default_rng(7)
    models = [MixtureSpec.sk(1.0, 0.2), MixtureSpec.sk(2.0), MixtureSpec.from_pairs([(2, 0.8), (3, 0.6)], 0.5)]
    bad, strict_checked, min_ratio = [], 0, math.inf
    for k in range(20):
        m = models[k % len(models)]
        mu0, mu1 = random_measure(rng), random_measure(rng)
        rep = convexity_scan(m, mu0, mu1, (0.25, 0.5, 0.75))
        if not rep.convex:
            bad.append((k, "convexity", rep.gaps, rep.error_budget))
        if rep.d >= 0.05:
            strict_checked += 1
            min_ratio = min(min_ratio, min(rep.gaps) / rep.error_budget)
            if not min(rep.gaps) > 3 * rep.error_budget:
                bad.append((k, "strict", rep.gaps, rep.error_budget))
    ok = not bad and time.time() - t0 < 600
    acceptance(5, "convexity along segments", ok, f"20 pairs, {strict_checked} strict checks, "
               f"min gap/budget {min_ratio:.3g} (need > 3), {time.time() - t0:.0f}s")
    assert ok, bad


def test_c06_representation_equality(acceptance):
    t0 = time.time()
    rows, bad = [], []
    for name, m, mu in CONTROL_MODELS:
        sol = solution(m, mu)
        controls = [ControlSpec.optimal(), ControlSpec.constant(0.0), ControlSpec.constant(contrary_constant(m.h))]
        opt, *consts = evaluate_controls(sol, controls, 0.0, 1.0, m.h, BatchParams(n_paths=100_000, dr=1e-3))
        if not (opt.equality_holds() and opt.se <= 1e-3):
            bad.append((name, opt))
        for c in consts:
            if not -c.gap > 3 * c.se:
                bad.append((name, c))
        rows.append(f"{name} z={opt.z:+.2f} se={opt.se:.1e} allow={opt.allowance:.1e} "
                    f"const z={min(-c.z for c in consts):.1f}")
    ok = not bad and time.time() - t0 < 900
    acceptance(6, "representation equality", ok, "; ".join(rows) + f"; {time.time() - t0:.0f}s")
    assert ok, bad


def test_c07_dominance(acceptance):
    t0 = time.time()
    rows, bad = [], []
    for k, (name, m, mu) in enumerate(CONTROL_MODELS):
        sol = solution(m, mu)
        controls = random_controls(50, np.random.default_rng(100 + k))
        rep = verify_dominance(sol, controls, 0.0, 1.0, m.h, BatchParams(n_paths=20_000, dr=1e-3, seed=k))
        if not rep.passed:
            bad.append((name, rep.max_violation_z))
        rows.append(f"{name} max z={rep.max_violation_z:+.2f}")
    ok = not bad and time.time() - t0 < 900
    acceptance(7, "dominance over 50 random controls", ok, "; ".join(rows) + f"; {time.time() - t0:.0f}s")
    assert ok, bad


def test_c08_ito_identities(acceptance):
    t0 = time.time()
    cases = [
        (MixtureSpec.sk(1.0), AtomicMeasure.dirac(0.0), 0.0),
        (MixtureSpec.sk(0.8, 0.3), AtomicMeasure.from_pairs([(0.2, 0.4), (0.7, 0.6)]), 0.3),
    ]
    worst_m, worst_i, ok = 0.0, 0.0, True
    for m, mu, x in cases:
        rep = verify_ito_identities(solution(m, mu), 0.0, 1.0, x, nested_windows(0.0, 1.0, 5),
                                    BatchParams(n_paths=100_000, dr=1e-3, seed=8, richardson=False))
        worst_m = max([worst_m] + [abs(w.martingale_z) for w in rep.windows])
        worst_i = max([worst_i] + [abs(w.identity_z) for w in rep.windows])
        ok = ok and rep.passed and len(rep.windows) == 5
    ok = ok and time.time() - t0 < 600
    acceptance(8, "Ito identities on 5 nested windows", ok,
               f"max |martingale z| {worst_m:.2f}, max |identity z| {worst_i:.2f}, {time.time() - t0:.0f}s")
    assert ok


def test_c09_strict_concavity(acceptance):
    t0 = time.time()
    rows, ok = [], True
    cases = [
        ("dirac0", MixtureSpec.sk(0.5), AtomicMeasure.dirac(0.0), ControlSpec.constant(-0.5), ControlSpec.constant(0.5)),
        ("two_atom", MixtureSpec.sk(0.6, 0.2), AtomicMeasure.from_pairs([(0.3, 0.5), (0.7, 0.5)]),
         ControlSpec.constant(0.0), ControlSpec.from_callable(lambda r, y: np.tanh(2 * y), "tanh(2y)")),
    ]
    for name, m, mu, u0, u1 in cases:
        rep = verify_concavity(solution(m, mu), u0, u1, 0.0, 1.0, m.h, (0.5,),
                               BatchParams(n_paths=100_000, dr=1e-3, seed=9, richardson=False))
        case_ok = rep.condition_holds and rep.control_distance >= 0.1 and rep.strict
        ok = ok and case_ok
        rows.append(f"{name} int(alpha zeta)={rep.drift_mass:.3f} |u0-u1|={rep.control_distance:.3f} "
                    f"gap/se={rep.gaps[0] / rep.gap_se[0]:.1f}")
    ok = ok and time.time() - t0 < 300
    acceptance(9, "strict concavity in the control", ok, "; ".join(rows) + f"; {time.time() - t0:.0f}s")
    assert ok


def test_c10_uniqueness(acceptance):
    t0 = time.time()
    rows, ok = [], True
    for beta in (0.3, 2.0):
        for h in (0.0, 0.5):
            res = minimize(MixtureSpec.sk(beta, h), 3, restarts=10, seed=0)
            rep = uniqueness_check(res.restarts)
            ok = ok and rep.status == "PASS"
            rows.append(f"beta={beta} h={h}: {rep.status} d={rep.max_pairwise_d:.1e} ({rep.n_compared} compared)")
    ok = ok and time.time() - t0 < 1800
    acceptance(10, "uniqueness across 10 restarts", ok, "; ".join(rows) + f"; {time.time() - t0:.0f}s")
    assert ok


def test_c11_finite_size(acceptance):
    t0 = time.time()
    cov = covariance_self_test(MixtureSpec.from_pairs([(2, 1.0), (3, 0.7)]), N=10, n_samples=4000)
    m = MixtureSpec.sk(0.3)
    target = free_energy(m, AtomicMeasure.dirac(0.0)).free_energy
    runs = [exact_free_energy(m, N, range(n)) for N, n in ((10, 1024), (14, 512), (18, 256))]
    bound = annealed_value(m)
    annealed_ok = all(r.mean <= bound + 3 * r.se for r in runs)
    dist = [abs(r.mean - target) for r in runs]
    se_pairs = [math.hypot(a.se, b.se) for a, b in zip(runs, runs[1:])]
    monotone = all(d1 - d0 <= 3 * s for d0, d1, s in zip(dist, dist[1:], se_pairs))
    approaches = dist[-1] < dist[0]
    ok = cov.passed and annealed_ok and monotone and approaches and time.time() - t0 < 600
    means = ", ".join(f"N={r.N}: {r.mean:.5f}+-{r.se:.1e}" for r in runs)
    acceptance(11, "finite-size sanity", ok, f"covariance max|z|={max(map(abs, cov.z)):.2f}; {means}; "
               f"target {target:.5f}; {time.time() - t0:.0f}s")
    assert ok


def test_c12_determinism(acceptance, tmp_path, capsys):
    t0 = time.time()
    cfg = {"model": {"betas": [[2, 0.2]], "h": 0.3}, "measures": [[[0.2, 0.3], [0.6, 0.7]]],
           "control_lab": {"n_paths": 20_000, "dr": 1e-3, "seed": 42, "random_controls": 4}}
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(cfg))
    codes = [cli_main(["verify-representation", str(path), "--out", str(tmp_path / d)]) for d in ("a", "b")]
    a = (tmp_path / "a" / "representation.csv").read_bytes()
    b = (tmp_path / "b" / "representation.csv").read_bytes()
    ok = codes == [0, 0] and a == b and time.time() - t0 < 300
    acceptance(12, "bit-identical CSV across reruns", ok, f"exit codes {codes}, {len(a)} bytes identical={a == b}, "
               f"{time.time() - t0:.0f}s")
    assert ok
