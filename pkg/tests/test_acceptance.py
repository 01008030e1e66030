"""Acceptance suite: twelve numbered criteria, one printed line each.

Heavy Monte Carlo ensembles are shared between criteria through
module-scoped fixtures; every criterion prints a [PASS]/[FAIL] line
directly to the terminal (bypassing capture) before asserting.
"""

import time

import numpy as np
import pytest
from scipy.special import i0

from homint import analytic, cli, harness, micro, skew
from homint.drift import DriftSpec, PeriodicDrift
from homint.homogenize import (
    effective_coefficient_cell,
    effective_coefficient_product,
    homogenized_params,
    solve_corrector,
)

SEED = 12345

P_ORACLE = 0.11920292202211755
P_PLUS_ORACLE = 0.056041297608351366
LAMBDA_RATIO_ORACLE = 0.308508322553671


def report(config, num, name, ok, detail, elapsed):
    """Print one pass/fail line per criterion, bypassing output capture."""
    line = (f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d} ({name}): "
            f"{detail}  [{elapsed:.1f}s]")
    capman = config.pluginmanager.getplugin("capturemanager")
    if capman is not None:
        with capman.global_and_fixture_disabled():
            print("\n" + line, flush=True)
    else:
        print(line, flush=True)


@pytest.fixture(scope="module")
def asym():
    return DriftSpec(left=PeriodicDrift(), right=PeriodicDrift(sin=(-2.0 * np.pi,)),
                     eta=0.5, interface_kind="zero")


@pytest.fixture(scope="module")
def params(asym):
    return homogenized_params(asym)


@pytest.fixture(scope="module")
def gate(params, pytestconfig):
    """Criteria that use the limit density require the gate to have passed."""
    t0 = time.time()
    sp = skew.SkewParams(p=params.p, c_plus=params.c_plus, c_minus=params.c_minus)
    ok = skew.density_gate(sp, rtol_norm=1e-10, tol_ck=1e-6, tol_flux=1e-6)
    elapsed = time.time() - t0
    report(pytestconfig, 10, "skew density gate", ok and elapsed < 5.0,
           f"normalization 1e-10, Chapman-Kolmogorov 1e-6, flux 1e-6", elapsed)
    assert ok and elapsed < 5.0
    return sp


@pytest.fixture(scope="module")
def sign_ensembles(asym):
    """Shared ensembles for criteria 6-7: eps in {0.2, 0.1, 0.05}, N = 2e4."""
    out = {}
    for eps in (0.2, 0.1, 0.05):
        cfg = micro.default_config(asym, eps, 1.0, 20000, seed=SEED)
        out[eps] = micro.simulate_micro(asym, cfg, [1.0])
    return out


def test_criterion_01_two_route_coefficients(pytestconfig):
    t0 = time.time()
    rng = np.random.default_rng(20240823)
    worst = 0.0
    for _ in range(100):
        d = PeriodicDrift(sin=tuple(rng.uniform(-1.5, 1.5, 3)),
                          cos=tuple(rng.uniform(-1.5, 1.5, 3)))
        cell = effective_coefficient_cell(solve_corrector(d))
        prod = effective_coefficient_product(d)
        worst = max(worst, abs(cell - prod) / prod)
    elapsed = time.time() - t0
    ok = worst <= 1e-10 and elapsed < 1.0
    report(pytestconfig, 1, "two-route coefficients", ok,
           f"worst relative deviation {worst:.2e} over 100 random drifts", elapsed)
    assert worst <= 1e-10
    assert elapsed < 1.0


def test_criterion_02_bessel_benchmark(pytestconfig):
    t0 = time.time()
    c2 = effective_coefficient_product(PeriodicDrift(sin=(-2.0 * np.pi,)))
    target = 1.0 / i0(2.0) ** 2
    elapsed = time.time() - t0
    ok = abs(c2 - target) <= 1e-8 and elapsed < 1.0
    report(pytestconfig, 2, "Bessel benchmark", ok,
           f"C^2 = {c2:.10f} vs 1/I0(2)^2 = {target:.10f}", elapsed)
    assert abs(c2 - target) <= 1e-8
    assert elapsed < 1.0


def test_criterion_03_exit_probability_rate(asym, params, pytestconfig):
    t0 = time.time()
    fit = analytic.exit_rate_fit(asym, 0.0, (1e-2, 1e-3, 1e-4, 1e-5),
                                 p_plus=params.p_plus)
    elapsed = time.time() - t0
    lim_err = abs(fit.limit_estimate - params.p_plus)
    ok = 0.4 <= fit.slope <= 0.6 and lim_err <= 1e-3 and elapsed < 10.0
    report(pytestconfig, 3, "exit-probability rate", ok,
           f"slope {fit.slope:.4f} in [0.4, 0.6], limit error {lim_err:.2e} <= 1e-3",
           elapsed)
    assert 0.4 <= fit.slope <= 0.6
    assert lim_err <= 1e-3
    assert elapsed < 10.0


def test_criterion_04_resolvent_bound(pytestconfig):
    t0 = time.time()
    lam = 1.0
    eps_grid = (1e-2, 1e-3, 1e-4)
    sups, worst_ode, worst_low = [], 0.0, 0.0
    for eps in eps_grid:
        delta = float(np.sqrt(eps))
        sol = analytic.resolvent_solve(eps, delta, lam)
        sups.append(sol.sup_f)
        worst_ode = max(worst_ode, sol.max_ode_residual)
        lowest = np.array(sol.lowest_order_coeffs())
        dev = float(np.max(np.abs(np.array(sol.coeffs) - lowest))) / delta
        worst_low = max(worst_low, dev)
    slope, _, _ = harness.fit_rate(eps_grid, sups)
    elapsed = time.time() - t0
    ok = (worst_ode <= 1e-8 and worst_low <= 3.0
          and 0.4 <= slope <= 0.6 and elapsed < 1.0)
    report(pytestconfig, 4, "resolvent bound", ok,
           f"ode residual {worst_ode:.1e} <= 1e-8, lowest-order dev {worst_low:.2f} "
           f"delta <= 3 delta, sup|f| exponent {slope:.3f} in [0.4, 0.6]", elapsed)
    assert worst_ode <= 1e-8
    assert worst_low <= 3.0
    assert 0.4 <= slope <= 0.6
    assert elapsed < 1.0


def test_criterion_05_resolvent_mc_crosscheck(pytestconfig):
    t0 = time.time()
    eps, lam = 0.05, 1.0
    delta = float(np.sqrt(eps))
    exact = float(analytic.resolvent_solve(eps, delta, lam)(0.0))
    est, se = analytic.resolvent_mc_crosscheck(eps, delta, lam, n_paths=10000,
                                               seed=7)
    elapsed = time.time() - t0
    dev = abs(est - exact)
    ok = dev <= 3.0 * se and elapsed < 60.0
    report(pytestconfig, 5, "resolvent MC cross-check", ok,
           f"MC {est:.5f} vs analytic {exact:.5f}, |dev| = {dev / se:.2f} s.e. <= 3",
           elapsed)
    assert dev <= 3.0 * se
    assert elapsed < 60.0


def test_criterion_06_sign_fraction_convergence(sign_ensembles, params, pytestconfig):
    t0 = time.time()
    rows = []
    for eps in (0.2, 0.1, 0.05):
        frac, se = micro.sign_fraction(sign_ensembles[eps], 1.0)
        rows.append((eps, frac, se, abs(frac - params.p)))
    elapsed = time.time() - t0
    decreasing = all(a[3] > b[3] for a, b in zip(rows, rows[1:]))
    final_ok = rows[-1][3] <= max(0.02, 3.0 * rows[-1][2])
    ok = decreasing and final_ok
    report(pytestconfig, 6, "sign-fraction convergence", ok,
           "errors " + " > ".join(f"{r[3]:.4f}" for r in rows)
           + f", final <= max(0.02, 3 s.e.) with p = {params.p:.5f}", elapsed)
    assert decreasing
    assert final_ok


def test_criterion_07_ks_convergence(sign_ensembles, gate, pytestconfig):
    t0 = time.time()
    cdf = lambda z: skew.limit_marginal_cdf(gate, 1.0, 0.0, z)
    rows = []
    for eps in (0.2, 0.1, 0.05):
        sample = sign_ensembles[eps].values[:10000, 0]
        rows.append((eps, harness.ks_distance(sample, cdf)))
    elapsed = time.time() - t0
    decreasing = all(a[1] > b[1] for a, b in zip(rows, rows[1:]))
    ok = decreasing and rows[-1][1] <= 0.05
    report(pytestconfig, 7, "KS convergence to the limit law", ok,
           "KS " + " > ".join(f"{r[1]:.4f}" for r in rows) + ", final <= 0.05",
           elapsed)
    assert decreasing
    assert rows[-1][1] <= 0.05


def test_criterion_08_occupation_plateau(asym, params, pytestconfig):
    t0 = time.time()
    cfg = micro.default_config(asym, 0.05, 5.0, 4000, seed=SEED + 1)
    ens = micro.simulate_micro(asym, cfg, [5.0], occupation=(-6.0, 6.0, 1920))
    ratio = micro.plateau_ratio(ens, params)
    elapsed = time.time() - t0
    target = params.lambda_plus / params.lambda_minus
    rel = abs(ratio - target) / target
    ok = rel <= 0.10 and elapsed < 900.0
    report(pytestconfig, 8, "occupation plateau ratio", ok,
           f"ratio {ratio:.5f} vs lambda+/lambda- = {target:.5f}, "
           f"relative error {rel:.3f} <= 0.10", elapsed)
    assert rel <= 0.10
    assert elapsed < 900.0


def test_criterion_09_averaging_rate(pytestconfig):
    t0 = time.time()
    # gentle drift so the first-order term of the averaging expansion is
    # present (a drift-free side degenerates to second order) and the step
    # rule stays affordable; h = sin is centred under both side measures
    spec = DriftSpec(left=PeriodicDrift(), right=PeriodicDrift(sin=(-1.0,)),
                     eta=0.5, interface_kind="zero")
    F = lambda x: np.exp(-0.5 * x * x)
    h = lambda u: np.sin(2.0 * np.pi * u)
    slope, res, ses = micro.averaging_residual(spec, F, h, 1.0,
                                               (0.2, 0.1, 0.05, 0.025), 10000,
                                               horizon=2.0, seed=0)
    elapsed = time.time() - t0
    ok = 0.7 <= slope <= 1.3 and elapsed < 600.0
    report(pytestconfig, 9, "averaging residual rate", ok,
           f"fitted slope {slope:.3f} in [0.7, 1.3], residuals "
           + ", ".join(f"{r:.2e}" for r in res), elapsed)
    assert 0.7 <= slope <= 1.3
    assert elapsed < 600.0


def test_criterion_10_density_gate(gate):
    # the gate fixture already ran, printed and asserted criterion 10;
    # this test pins its position in the numbered sequence
    assert gate.p == pytest.approx(P_ORACLE, abs=1e-9)


def test_criterion_11_harmonic_martingale(asym, pytestconfig):
    t0 = time.time()
    cfg = micro.default_config(asym, 0.1, 1.0, 10000, seed=5)
    ens = micro.simulate_micro(asym, cfg, [1.0])
    h = micro.harmonic_coordinate(asym, 0.1, ens.terminal)
    h0 = float(micro.harmonic_coordinate(asym, 0.1, 0.0))
    drift = float(np.mean(h)) - h0
    se = float(np.std(h, ddof=1) / np.sqrt(len(h)))
    elapsed = time.time() - t0
    ok = abs(drift) <= 3.0 * se and elapsed < 300.0
    report(pytestconfig, 11, "harmonic-coordinate martingale", ok,
           f"drift {drift:+.5f} = {drift / se:+.2f} s.e., within 3 s.e. of 0",
           elapsed)
    assert abs(drift) <= 3.0 * se
    assert elapsed < 300.0


def test_criterion_12_determinism(tmp_path, pytestconfig):
    t0 = time.time()
    base = ["converge", "--config", "configs/asymmetric.toml", "--quick"]
    out1, out2 = tmp_path / "run1", tmp_path / "run2"
    cli.main(base + ["--out", str(out1), "--workers", "1"])
    cli.main(base + ["--out", str(out2), "--workers", "4"])
    names = sorted(p.name for p in out1.iterdir())
    identical = names == sorted(p.name for p in out2.iterdir()) and all(
        (out1 / n).read_bytes() == (out2 / n).read_bytes() for n in names)
    elapsed = time.time() - t0
    report(pytestconfig, 12, "bit-identical reports", identical,
           f"{len(names)} CSVs byte-identical across worker counts", elapsed)
    assert identical
