"""Experiment orchestration: convergence studies, statistics, CSV reports.

Every CSV written here starts with a comment line carrying the config hash
and the master seed, and all numbers are formatted with repr-level
precision, so identical (config, seed) pairs produce byte-identical files.
"""

import hashlib
import os
from dataclasses import dataclass, field, asdict

import numpy as np

from . import analytic, homogenize, micro, skew
from .drift import DriftSpec, PeriodicDrift
from .errors import DegenerateFit, ConfigError


def fit_rate(xs, ys):
    """Ordinary least squares in log-log: returns (slope, intercept, r2).

    Raises DegenerateFit when any y vanishes (the error is exact, not
    power-law); callers report that case as exact instead of fitted.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) < 3:
        raise ConfigError("rate fit needs at least 3 points")
    if np.any(ys == 0.0):
        raise DegenerateFit("exact zeros in rate-fit data")
    if np.any(xs <= 0) or np.any(ys < 0):
        raise ConfigError("rate fit needs positive abscissae and errors")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - np.mean(ly)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def ks_distance(sample, cdf):
    """Kolmogorov-Smirnov statistic between a sample and an exact CDF."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = len(x)
    f = cdf(x)
    upper = np.max(np.arange(1, n + 1) / n - f)
    lower = np.max(f - np.arange(0, n) / n)
    return float(max(upper, lower))


def ks_critical(n, level=0.01):
    """Asymptotic KS critical value; 1.63/sqrt(n) at the 1% level."""
    c = {0.10: 1.22, 0.05: 1.36, 0.01: 1.63}[level]
    return c / np.sqrt(n)


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one convergence study."""

    spec: DriftSpec
    seed: int = 12345
    out_dir: str = "out"
    horizon: float = 1.0
    sign_eps: tuple = (0.2, 0.1, 0.05)
    sign_paths: int = 20000
    occupation_eps: float = 0.05
    occupation_horizon: float = 5.0
    occupation_paths: int = 4000
    exit_eps: tuple = (1e-2, 1e-3, 1e-4, 1e-5)
    resolvent_eps: tuple = (1e-2, 1e-3, 1e-4)
    resolvent_lambda: float = 1.0
    averaging_eps: tuple = (0.2, 0.1, 0.05, 0.025)
    averaging_paths: int = 10000
    averaging_horizon: float = 2.0
    n_workers: int = 1
    thresholds: dict = field(default_factory=lambda: {
        "ks_final": 0.05,
        "sign_tolerance": 0.02,
        "occupation_ratio_rel": 0.10,
        "exit_slope": (0.4, 0.6),
        "exit_limit_abs": 1e-3,
        "resolvent_slope": (0.4, 0.6),
        "averaging_slope": (0.7, 1.3),
    })

    def __post_init__(self):
        for grid in (self.sign_eps, self.exit_eps, self.resolvent_eps, self.averaging_eps):
            if any(not 0 < e <= 1 for e in grid):
                raise ConfigError("all eps must lie in (0, 1]")
            if list(grid) != sorted(grid, reverse=True):
                raise ConfigError("eps grids must be sorted descending")

    def config_hash(self):
        # n_workers and out_dir are execution details: results are
        # bit-identical regardless, so they must not change the hash.
        d = asdict(self)
        d.pop("n_workers")
        d.pop("out_dir")
        payload = repr(sorted(d.items())).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


@dataclass
class ConvergenceReport:
    config_hash: str
    seed: int
    params: homogenize.HomogenizedParams
    sign_rows: list          # (eps, fraction, se, |fraction - p|)
    ks_rows: list            # (eps, ks)
    occupation_ratio: float
    exit_fit: analytic.ExitProbabilityTable
    resolvent_rows: list     # (eps, delta, sup_f, ode_residual)
    resolvent_slope: float
    averaging_slope: float
    averaging_rows: list     # (eps, residual, se)
    flags: dict

    def passed(self):
        return all(self.flags.values())

    def summary_lines(self):
        lines = [f"config={self.config_hash} seed={self.seed}"]
        for k, v in self.params.as_dict().items():
            lines.append(f"  {k} = {v:.10g}")
        for name, ok in sorted(self.flags.items()):
            lines.append(f"  [{'PASS' if ok else 'FAIL'}] {name}")
        return lines


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_csv(path, header_cols, rows, config_hash, seed):
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={config_hash} seed={seed}\n")
        fh.write(",".join(header_cols) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def run_convergence_study(cfg: ExperimentConfig) -> ConvergenceReport:
    """Chain all verification studies and emit CSVs into cfg.out_dir."""
    spec = cfg.spec
    params = homogenize.homogenized_params(spec)
    sp = skew.SkewParams(p=params.p, c_plus=params.c_plus, c_minus=params.c_minus)
    skew.density_gate(sp)

    t = cfg.horizon
    sign_rows, ks_rows = [], []
    for eps in cfg.sign_eps:
        sim = micro.default_config(spec, eps, t, cfg.sign_paths, cfg.seed)
        ens = micro.simulate_micro(spec, sim, [t], n_workers=cfg.n_workers)
        frac, se = micro.sign_fraction(ens, t)
        sign_rows.append((eps, frac, se, abs(frac - params.p)))
        cdf = lambda z: skew.limit_marginal_cdf(sp, t, 0.0, z)
        ks_rows.append((eps, ks_distance(ens.values[:, 0], cdf)))

    occ_eps = cfg.occupation_eps
    occ_cfg = micro.default_config(spec, occ_eps, cfg.occupation_horizon,
                                   cfg.occupation_paths, cfg.seed + 1)
    nbins = int(np.ceil(12.0 / (occ_eps / 8.0) / 64) * 64)
    occ_ens = micro.simulate_micro(spec, occ_cfg, [cfg.occupation_horizon],
                                   occupation=(-6.0, 6.0, nbins),
                                   n_workers=cfg.n_workers)
    occupation_ratio = micro.plateau_ratio(occ_ens, params)

    exit_fit = analytic.exit_rate_fit(spec, 0.0, cfg.exit_eps, p_plus=params.p_plus)

    resolvent_rows = []
    for eps in cfg.resolvent_eps:
        delta = float(np.sqrt(eps))
        sol = analytic.resolvent_solve(eps, delta, cfg.resolvent_lambda)
        resolvent_rows.append((eps, delta, sol.sup_f, sol.max_ode_residual))
    res_slope, _, _ = fit_rate([r[0] for r in resolvent_rows],
                               [r[2] for r in resolvent_rows])

    # Averaging-rate study on a fixed gentle drift: h = sin(2 pi u) is
    # centred under the invariant measure of both sides (the right-side
    # potential is even in u), so the residual decays at the generic
    # first-order rate; a drift-free side would degenerate to second order.
    avg_spec = DriftSpec(left=PeriodicDrift(), right=PeriodicDrift(sin=(-1.0,)),
                         eta=0.5, interface_kind="zero")
    bump = lambda x: np.exp(-0.5 * x * x)
    hfun = lambda u: np.sin(2.0 * np.pi * u)
    avg_slope, avg_res, avg_se = micro.averaging_residual(
        avg_spec, bump, hfun, 1.0, cfg.averaging_eps, cfg.averaging_paths,
        horizon=cfg.averaging_horizon, seed=cfg.seed + 2)
    averaging_rows = list(zip(sorted(cfg.averaging_eps, reverse=True), avg_res, avg_se))

    th = cfg.thresholds
    sign_final = sign_rows[-1]
    lam_ratio = params.lambda_plus / params.lambda_minus
    flags = {
        "sign_fraction_final": abs(sign_final[1] - params.p)
        <= max(th["sign_tolerance"], 3.0 * sign_final[2]),
        "sign_fraction_trend": all(sign_rows[i][3] >= sign_rows[i + 1][3] - 2 * sign_rows[i + 1][2]
                                   for i in range(len(sign_rows) - 1)),
        "ks_final": ks_rows[-1][1] <= th["ks_final"],
        "ks_trend": all(ks_rows[i][1] >= ks_rows[i + 1][1] - 0.01
                        for i in range(len(ks_rows) - 1)),
        "occupation_ratio": abs(occupation_ratio - lam_ratio)
        <= th["occupation_ratio_rel"] * lam_ratio,
        "exit_slope": exit_fit.exact
        or th["exit_slope"][0] <= exit_fit.slope <= th["exit_slope"][1],
        "exit_limit": abs(exit_fit.limit_estimate - params.p_plus) <= th["exit_limit_abs"],
        "resolvent_slope": th["resolvent_slope"][0] <= res_slope <= th["resolvent_slope"][1],
        "averaging_slope": th["averaging_slope"][0] <= avg_slope <= th["averaging_slope"][1],
    }

    report = ConvergenceReport(
        config_hash=cfg.config_hash(), seed=cfg.seed, params=params,
        sign_rows=sign_rows, ks_rows=ks_rows, occupation_ratio=occupation_ratio,
        exit_fit=exit_fit, resolvent_rows=resolvent_rows, resolvent_slope=res_slope,
        averaging_slope=avg_slope, averaging_rows=averaging_rows, flags=flags)
    _write_report(cfg, report, occ_ens)
    return report


def _write_report(cfg, report, occ_ens):
    os.makedirs(cfg.out_dir, exist_ok=True)
    h, s = report.config_hash, report.seed
    p = report.params
    write_csv(os.path.join(cfg.out_dir, "params.csv"),
              ["name", "value"], sorted(p.as_dict().items()), h, s)
    write_csv(os.path.join(cfg.out_dir, "sign_fraction.csv"),
              ["eps", "fraction", "se", "abs_error"], report.sign_rows, h, s)
    write_csv(os.path.join(cfg.out_dir, "ks.csv"),
              ["eps", "ks_distance"], report.ks_rows, h, s)
    write_csv(os.path.join(cfg.out_dir, "exit_rate.csv"),
              ["eps", "delta", "prob", "target_p_plus"],
              [(e, d, pr, report.exit_fit.p_plus_target)
               for e, d, pr in zip(report.exit_fit.eps, report.exit_fit.delta,
                                   report.exit_fit.prob)], h, s)
    write_csv(os.path.join(cfg.out_dir, "resolvent.csv"),
              ["eps", "delta", "sup_f", "ode_residual"], report.resolvent_rows, h, s)
    write_csv(os.path.join(cfg.out_dir, "averaging.csv"),
              ["eps", "residual", "se"], report.averaging_rows, h, s)
    nfine = len(occ_ens.occupation)
    n_coarse = max(d for d in range(1, 241) if nfine % d == 0)
    edges, dens = micro.empirical_density(occ_ens, n_coarse)
    write_csv(os.path.join(cfg.out_dir, "occupation.csv"),
              ["bin_left", "bin_right", "density"],
              [(edges[i], edges[i + 1], dens[i]) for i in range(len(dens))], h, s)
    write_csv(os.path.join(cfg.out_dir, "report.csv"),
              ["check", "passed"],
              sorted((k, int(v)) for k, v in report.flags.items()), h, s)
