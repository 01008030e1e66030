"""Command-line interface.

Subcommands:
  params        homogenized parameters of a drift config
  simulate      microscopic Euler-Maruyama ensemble, CSV output
  limit-sample  exact paths of the limiting rescaled skew BM, CSV output
  exit-prob     scale-function exit probabilities over an eps grid
  resolvent     worst-case resolvent sup norms over an eps grid
  converge      full convergence study; exit code 0 iff all checks pass
"""

import argparse
import sys

import numpy as np

from . import analytic, harness, homogenize, micro, skew
from .drift import load_drift_config


def _add_common(p):
    p.add_argument("--config", required=True, help="drift TOML config")
    p.add_argument("--seed", type=int, default=12345)


def cmd_params(args):
    spec = load_drift_config(args.config)
    params = homogenize.homogenized_params(spec)
    print("name,value")
    for k, v in params.as_dict().items():
        print(f"{k},{v:.17g}")
    print(file=sys.stderr)
    for k, v in params.as_dict().items():
        print(f"{k:>14s} = {v:.10g}", file=sys.stderr)
    return 0


def cmd_simulate(args):
    spec = load_drift_config(args.config)
    cfg = micro.default_config(spec, args.eps, args.horizon, args.paths, args.seed)
    times = np.linspace(args.horizon / args.times, args.horizon, args.times)
    ens = micro.simulate_micro(spec, cfg, times, n_workers=args.workers)
    with open(args.out, "w") as fh:
        fh.write(f"# seed={args.seed} eps={args.eps} dt={cfg.dt:.17g}\n")
        fh.write("path_id,t,value\n")
        for i in range(cfg.n_paths):
            for j, t in enumerate(times):
                fh.write(f"{i},{t:.17g},{ens.values[i, j]:.17g}\n")
    print(f"wrote {args.out}")
    return 0


def cmd_limit_sample(args):
    params = skew.SkewParams(p=args.p, c_plus=args.cplus, c_minus=args.cminus)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(args.seed)))
    times = np.linspace(args.horizon / args.times, args.horizon, args.times)
    paths = skew.sample_limit_path(params, times, np.zeros(args.paths), rng)
    with open(args.out, "w") as fh:
        fh.write(f"# seed={args.seed} p={args.p} C+={args.cplus} C-={args.cminus}\n")
        fh.write("path_id,t,value\n")
        for i in range(args.paths):
            for j, t in enumerate(times):
                fh.write(f"{i},{t:.17g},{paths[i, j]:.17g}\n")
    print(f"wrote {args.out}")
    return 0


def cmd_exit_prob(args):
    spec = load_drift_config(args.config)
    eps_grid = sorted((float(e) for e in args.eps), reverse=True)
    fit = analytic.exit_rate_fit(spec, args.x, eps_grid)
    print("eps,delta,value,error_estimate")
    for e, d, pr in zip(fit.eps, fit.delta, fit.prob):
        print(f"{e:.17g},{d:.17g},{pr:.17g},{abs(pr - fit.p_plus_target):.17g}")
    print(f"# limit={fit.limit_estimate:.10g} slope={fit.slope:.4g} "
          f"p_plus={fit.p_plus_target:.10g}", file=sys.stderr)
    return 0


def cmd_resolvent(args):
    print("eps,delta,value,error_estimate")
    for e in sorted((float(e) for e in args.eps), reverse=True):
        delta = float(np.sqrt(e))
        sol = analytic.resolvent_solve(e, delta, args.lam)
        print(f"{e:.17g},{delta:.17g},{sol.sup_f:.17g},{sol.max_ode_residual:.17g}")
    return 0


def cmd_converge(args):
    spec = load_drift_config(args.config)
    kwargs = {}
    if args.quick:
        kwargs = dict(sign_paths=2000, occupation_paths=500, averaging_paths=2000,
                      sign_eps=(0.2, 0.1), occupation_eps=0.1,
                      averaging_eps=(0.2, 0.1, 0.05), occupation_horizon=2.0)
        th = harness.ExperimentConfig.__dataclass_fields__["thresholds"].default_factory()
        th["sign_tolerance"] = 0.05     # coarse eps grid in quick mode
        kwargs["thresholds"] = th
    cfg = harness.ExperimentConfig(spec=spec, seed=args.seed, out_dir=args.out,
                                   n_workers=args.workers, **kwargs)
    report = harness.run_convergence_study(cfg)
    for line in report.summary_lines():
        print(line)
    return 0 if report.passed() else 1


def main(argv=None):
    ap = argparse.ArgumentParser(prog="homint")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("params", help="homogenized parameters")
    _add_common(p)
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("simulate", help="microscopic ensemble")
    _add_common(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--paths", type=int, default=1000)
    p.add_argument("--times", type=int, default=20)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="paths.csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("limit-sample", help="exact limit-process paths")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--cplus", type=float, default=1.0)
    p.add_argument("--cminus", type=float, default=1.0)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--paths", type=int, default=1000)
    p.add_argument("--times", type=int, default=20)
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--out", default="limit_paths.csv")
    p.set_defaults(func=cmd_limit_sample)

    p = sub.add_parser("exit-prob", help="exit probabilities, delta = sqrt(eps)")
    _add_common(p)
    p.add_argument("--eps", nargs="+", default=["1e-2", "1e-3", "1e-4", "1e-5"])
    p.add_argument("--x", type=float, default=0.0)
    p.set_defaults(func=cmd_exit_prob)

    p = sub.add_parser("resolvent", help="worst-case resolvent sup norms")
    p.add_argument("--eps", nargs="+", default=["1e-2", "1e-3", "1e-4"])
    p.add_argument("--lam", type=float, default=1.0)
    p.set_defaults(func=cmd_resolvent)

    p = sub.add_parser("converge", help="full convergence study")
    _add_common(p)
    p.add_argument("--out", default="out")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--quick", action="store_true",
                   help="scaled-down study for smoke tests")
    p.set_defaults(func=cmd_converge)

    args = ap.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
