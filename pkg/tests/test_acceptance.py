"""Acceptance criteria at full scale.

Every stochastic input uses seed 1, fixed before any result was seen.  Each
criterion records one PASS/FAIL line, printed in the pytest terminal summary
(``pytest tests/test_acceptance.py -rA`` also shows the detail).  On one
core the module takes roughly 20 minutes, dominated by the two 1e7-cycle
runs; set CRITIQ_THREADS to use more cores.
"""

import math

import numpy as np
import pytest
from scipy import integrate

from critiq import qsim, rwalk, stats, theory
from critiq.dists import calibrate, parse_distribution

pytestmark = pytest.mark.slow

SEED = 1
CAP = 10**7
BIG = 10**7
POINTS = np.array([1e2, 1e3, 1e4])
GRID = qsim.geometric_grid()

EXP = parse_distribution("exp:1")
ERL2 = parse_distribution("erlang:2,2")
MM1 = calibrate(EXP, EXP)
GG1 = calibrate(ERL2, parse_distribution("h2:2"))
MG1 = calibrate(EXP, ERL2)
GM1 = calibrate(ERL2, EXP)


def safe_upper(model):
    return CAP * model.service.mean / 10


@pytest.fixture(scope="module")
def mm1_cycles():
    return rwalk.sample_cycles(MM1, BIG, seed=SEED, step_cap=CAP)


@pytest.fixture(scope="module")
def gg1_cycles():
    return rwalk.sample_cycles(GG1, BIG, seed=SEED, step_cap=CAP)


@pytest.fixture(scope="module")
def mm1_paths():
    return qsim.simulate_paths(MM1, GRID, 10**4, seed=SEED)


def _fmt(values):
    return "[" + ", ".join(f"{v:.4f}" for v in np.atleast_1d(values)) + "]"


def test_01_mm1_busy_tail(mm1_cycles, acceptance_log):
    c = 1 / math.sqrt(math.pi)
    curve = stats.empirical_survival(mm1_cycles, POINTS)
    rel = np.abs(curve.scaled - c) / c
    ok = bool(np.all(rel <= 0.10))
    acceptance_log(
        "1 M/M/1 busy tail",
        ok,
        f"sqrt(x)P(B>x) at {POINTS.tolist()} = {_fmt(curve.scaled)} vs {c:.4f}, "
        f"max rel err {rel.max():.4f} (tol 0.10), censored {mm1_cycles.n_censored}",
    )
    assert ok


def test_02_gg1_busy_tail(gg1_cycles, acceptance_log):
    est = rwalk.constants_from_cycles(GG1, gg1_cycles)
    fit = stats.fit_tail(gg1_cycles, safe_upper=safe_upper(GG1))
    cmp = stats.compare_to_theory(fit, GG1, est, tol=0.10)
    ok = cmp["pass"] and abs(fit.exponent + 0.5) <= 0.05
    acceptance_log(
        "2 G/G/1 busy tail",
        ok,
        f"constant {fit.constant:.4f} vs {cmp['c_theory']:.4f} (E^[I] = {est.mean_idle:.4f}), "
        f"rel err {cmp['rel_err']:.4f} (tol 0.10); exponent {fit.exponent:.4f} (tol +-0.05)",
    )
    assert ok


@pytest.mark.parametrize(
    "model, exact, label",
    [(MG1, theory.mean_idle_mg1(1.0), "M/G/1"), (GM1, theory.mean_idle_gm1(1.0, 0.5), "G/M/1")],
)
def test_03_idle_identities(model, exact, label, acceptance_log):
    batch = rwalk.sample_cycles(model, 10**6, seed=SEED, step_cap=CAP)
    est = rwalk.constants_from_cycles(model, batch)
    z = (est.mean_idle - exact) / est.se_idle
    ok = abs(z) <= 3
    acceptance_log(
        f"3 idle identity {label}",
        ok,
        f"E^[I] = {est.mean_idle:.5f} +- {est.se_idle:.5f} vs {exact:.5f}, z = {z:+.2f} (tol 3)",
    )
    assert ok


def test_04_b_constant(mm1_cycles, acceptance_log):
    est = rwalk.constants_from_cycles(MM1, mm1_cycles)
    back = rwalk.mean_idle_from_b(est.b_from_idle, MM1.sigma)
    ident = abs(back - est.mean_idle) / est.mean_idle
    ok = abs(est.b_from_idle) < 0.01 and ident < 1e-12
    acceptance_log(
        "4 b constant M/M/1",
        ok,
        f"b_from_idle = {est.b_from_idle:+.5f} (tol 0.01); identity rel err {ident:.1e}",
    )
    assert ok


@pytest.mark.parametrize("which", ["M/M/1", "G/G/1"])
def test_05_n_tail(which, mm1_cycles, gg1_cycles, acceptance_log):
    model, batch = (MM1, mm1_cycles) if which == "M/M/1" else (GG1, gg1_cycles)
    est = rwalk.constants_from_cycles(model, batch)
    c = theory.n_tail_constant(est.mean_idle, model.lam, model.ca2, model.cs2)
    curve = rwalk.n_survival(batch, POINTS)
    rel = np.abs(curve.scaled - c) / c
    ok = bool(np.all(rel <= 0.10))
    acceptance_log(
        f"5 N tail {which}",
        ok,
        f"sqrt(n)P(N>n) = {_fmt(curve.scaled)} vs {c:.4f}, max rel err {rel.max():.4f} (tol 0.10)",
    )
    assert ok


@pytest.mark.parametrize("which, tol", [("M/M/1", 0.10), ("erlang:2/exp", 0.15)])
def test_06_bravo_limit(which, tol, mm1_paths, acceptance_log):
    if which == "M/M/1":
        model, paths = MM1, mm1_paths
    else:
        model, paths = GM1, None
    curve = qsim.bravo_curve(model, GRID, 10**4, seed=SEED, paths=paths)
    target = theory.bravo_limit(model.ca2, model.cs2)
    rel = abs(curve.final_ratio - target) / target
    mono = qsim.monotone_within_ci(curve)
    ok = rel <= tol and mono
    acceptance_log(
        f"6 BRAVO limit {which}",
        ok,
        f"ratio over grid {_fmt(curve.ratio)}, final {curve.final_ratio:.4f} +- {curve.ratio_ci[-1]:.4f} "
        f"vs {target:.4f}, rel err {rel:.4f} (tol {tol}); monotone within CI: {mono}",
    )
    assert ok


def test_07_bravo_dip(acceptance_log):
    rows = qsim.load_sweep(EXP, EXP, [0.5, 0.8, 1.0, 1.25, 2.0], t_horizon=1e4, n_reps=2000, seed=SEED)
    ok = qsim.dip_at_one(rows)
    acceptance_log(
        "7 BRAVO dip",
        ok,
        "; ".join(f"rho {r.rho}: {r.ratio:.4f} +- {r.ci_half:.4f}" for r in rows),
    )
    assert ok


def test_08_oracle_equivalence(mm1_cycles, acceptance_log):
    x = np.array([1.0, 10.0, 100.0])
    curve = stats.empirical_survival(mm1_cycles, x)
    exact = theory.mm1_busy_survival(1.0, x)
    z = (curve.survival - exact) / curve.se
    f = lambda t: theory.mm1_busy_density(1.0, t)
    mass = sum(
        integrate.quad(f, a, b, limit=400, epsabs=0, epsrel=1e-12)[0]
        for a, b in [(0, 1), (1, 100), (100, 1e4)]
    ) + integrate.quad(f, 1e4, np.inf, limit=400)[0]
    ok = bool(np.all(np.abs(z) <= 3)) and abs(mass - 1) < 1e-6
    acceptance_log(
        "8 oracle equivalence",
        ok,
        f"P^ {_fmt(curve.survival)} vs exact {_fmt(exact)}, z = {_fmt(z)} (tol 3); "
        f"density mass - 1 = {mass - 1:.1e} (tol 1e-6)",
    )
    assert ok


def test_09_ui_diagnostic(mm1_paths, acceptance_log):
    ui = qsim.ui_diagnostic(MM1, GRID, 10**4, seed=SEED, paths=mm1_paths)
    ok = ui.no_upward_trend
    acceptance_log(
        "9 UI diagnostic",
        ok,
        f"mean Q^2/t {_fmt(ui.mean)}, slope per log t {ui.slope:+.4f} +- {ui.slope_ci:.4f} "
        f"(pass when slope - ci <= 0)",
    )
    assert ok


def test_10_estimator_calibration(mm1_paths, acceptance_log):
    u = 1.0 - np.random.default_rng(SEED).random(10**6)
    fit = stats.fit_tail(u**-2)  # P(X > x) = x^-1/2 exactly
    tail_ok = abs(fit.exponent + 0.5) <= 0.02 and abs(fit.constant - 1) <= 0.05
    # M/M/1 arrivals are a pure Poisson stream
    curve = qsim.bravo_curve(MM1, GRID, 10**4, paths=mm1_paths, count="arrivals")
    within = np.abs(curve.ratio - 1) <= curve.ratio_ci
    ok = tail_ok and bool(np.all(within))
    acceptance_log(
        "10 estimator calibration",
        ok,
        f"Pareto-1/2 exponent {fit.exponent:.4f} (tol +-0.02), constant {fit.constant:.4f} (tol 5%); "
        f"Poisson ratio {_fmt(curve.ratio)} +- {_fmt(curve.ratio_ci)}",
    )
    assert ok
