"""Command line entry point: ``python -m hscale_tikhonov <command>``.

Commands
--------
solve             single regularized solve, optionally writing the solution
rates             deterministic sweep with an a priori rule
lepskij           sweep with the balancing principle
stoch             white-noise sweep with the stochastic functional
verify-stability  Monte Carlo check of a stability estimate (exit 2 on violation)
check-interp      interpolation sweeps in X and fit of the residual constant
"""

import argparse
import csv
import sys
from dataclasses import replace

from ..noise import data_scale, rng_for
from ..scale import check_interpolation
from ..solver import solve
from .config import ExperimentConfig, load_config
from .experiments import (build_context, choose_alpha, observe, run_lepskij_experiment,
                          run_rate_experiment, run_stochastic_experiment, solve_config)
from .stability import (check_interpolation_Y, smooth_perturbations,
                        verify_autoconvolution_stability, verify_exponential_stability)

EXIT_VIOLATION = 2


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.n is not None:
        cfg = replace(cfg, problem=replace(cfg.problem, n=args.n))
    if getattr(args, "workers", None) is not None:
        cfg = replace(cfg, workers=args.workers)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, noise=replace(cfg.noise, base_seed=args.seed))
    out = cfg.output
    if getattr(args, "csv", None):
        out = replace(out, csv=args.csv)
    if getattr(args, "plot", None):
        out = replace(out, plot=args.plot)
    return replace(cfg, output=out)


def _cmd_solve(args) -> int:
    cfg = _config(args)
    ctx = build_context(cfg)
    delta = cfg.noise.deltas[0] if args.delta is None else args.delta
    sigma = cfg.noise.sigmas[0] if args.sigma is None else args.sigma
    alpha = args.alpha if args.alpha is not None else choose_alpha(cfg, ctx.rate, delta, sigma)
    obs = observe(ctx, delta, sigma, args.rep)
    sol = solve(ctx.problem, ctx.scale, obs, solve_config(cfg, ctx.problem.kind, alpha))
    s, a = cfg.indices.s, cfg.indices.a
    err = sol.f_hat - ctx.f_dagger
    print(f"{ctx.problem.kind}, n={ctx.problem.grid.n}, delta={delta:g}, sigma={sigma:g}, alpha={alpha:.6g}")
    print(f"converged={sol.converged} ({sol.message}), iterations={sol.iterations}, "
          f"gradient norm={sol.gradient_norm:.3e}")
    print(f"error: s-norm {ctx.scale.norm(s, err):.6e}, -a norm {ctx.scale.norm(-a, err):.6e}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["t", "f_hat", "f_dagger"])
            for row in zip(ctx.problem.grid.nodes, sol.f_hat, ctx.f_dagger):
                out.writerow([repr(float(v)) for v in row])
    return 0


def _sweep(runner, rule=None):
    def command(args) -> int:
        cfg = _config(args)
        if rule is None:
            if cfg.rule.name == "lepskij":
                cfg = replace(cfg, rule=replace(cfg.rule, name="apriori-det"))
        elif cfg.rule.name != rule:
            cfg = replace(cfg, rule=replace(cfg.rule, name=rule))
        if rule == "lepskij":
            cfg = replace(cfg, noise=replace(cfg.noise, sigmas=[0.0]))
        report = runner(cfg)
        print(report.summary())
        if report.trace:
            for tr in report.trace:
                print(f"  delta={tr.delta:g} rep={tr.rep}: selected {tr.selected + 1} of "
                      f"{len(tr.alphas)}, best {tr.best + 1}, error ratio {tr.ratio:.3f}")
        if not cfg.output.csv:
            sys.stdout.write(report.to_csv())
        return 0
    return command


def _cmd_verify(args) -> int:
    if args.operator == "autoconvolution":
        rep = verify_autoconvolution_stability(args.n or 128, args.tau, args.samples, args.seed or 0)
        print(f"autoconvolution, tau={rep.tau:g}: worst ratio {rep.worst_ratio:.6f} "
              f"(bound {rep.bound:.6f}), worst identity error {rep.worst_identity_error:.2e}, "
              f"violations {rep.violations}")
        bad = rep.violations > 0 or rep.worst_identity_error > 1e-9
    else:
        cfg = _config(args)
        cfg = replace(cfg, problem=replace(cfg.problem, kind="exponential-growth"))
        if cfg.truth.profile == "auto":
            cfg = replace(cfg, truth=replace(cfg.truth, profile="constant"))
        rep = verify_exponential_stability(cfg, args.r, args.samples, args.seed or 0)
        print(f"exponential growth, r={rep.r:g}: c_down {rep.c_down:.6f} "
              f"(closed-form bound {rep.c_down_exact:.6f}), K {rep.K:.6f}, R {rep.R:.6f}")
        print(f"worst ratio {rep.worst_ratio:.6f}, violations {rep.violations}, "
              f"min linearization slack {rep.linearization_slack.min():.3e}")
        bad = rep.violations > 0 or rep.linearization_slack.min() < -1e-12
    return EXIT_VIOLATION if bad else 0


def _cmd_interp(args) -> int:
    cfg = _config(args)
    ctx = build_context(cfg)
    a, s = cfg.indices.a, cfg.indices.s
    rng = rng_for(args.seed or 0, 99)
    hs = smooth_perturbations(ctx.scale, s, 1.0, args.samples, rng)
    ts = rng.uniform(-a, s, args.samples)
    violations = sum(not check_interpolation(ctx.scale, a, t, s, h).holds for t, h in zip(ts, hs))
    print(f"X-scale interpolation (a={a:g}, s={s:g}): {args.samples} samples, {violations} violations")
    fits = [check_interpolation_Y(ctx.problem, data_scale(ctx.problem.grid), args.theta, rho,
                                  args.samples, s=s, t=args.t, f_dagger=ctx.f_dagger,
                                  scale=ctx.scale, seed=args.seed or 0)
            for rho in args.rho]
    for fit in fits:
        print(f"residual interpolation theta={fit.theta:g}, t={fit.t:g}, rho={fit.rho:g}: "
              f"C={fit.C:.6g}, fitted theta {fit.theta_fit:.4f}")
    bad = violations > 0 or not all(f.finite for f in fits)
    return EXIT_VIOLATION if bad else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hscale_tikhonov",
                                     description="Tikhonov regularization in Hilbert scales")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, sweep=False):
        p.add_argument("--config", help="TOML experiment configuration")
        p.add_argument("--n", type=int, help="grid size override")
        p.add_argument("--seed", type=int, help="base seed override")
        if sweep:
            p.add_argument("--workers", type=int, help="process pool size")
            p.add_argument("--csv", help="write the result table here")
            p.add_argument("--plot", help="write an SVG log-log plot here")

    p = sub.add_parser("solve", help="single regularized solve")
    common(p)
    p.add_argument("--delta", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--alpha", type=float, help="skip the parameter rule")
    p.add_argument("--rep", type=int, default=0, help="replication (white-noise stream)")
    p.add_argument("--out", help="write t, f_hat, f_dagger as CSV")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("rates", help="deterministic sweep with an a priori rule")
    common(p, sweep=True)
    p.set_defaults(func=_sweep(run_rate_experiment))

    p = sub.add_parser("lepskij", help="balancing-principle sweep")
    common(p, sweep=True)
    p.set_defaults(func=_sweep(run_lepskij_experiment, "lepskij"))

    p = sub.add_parser("stoch", help="white-noise sweep")
    common(p, sweep=True)
    p.set_defaults(func=_sweep(run_stochastic_experiment, "apriori-stoch"))

    p = sub.add_parser("verify-stability", help="Monte Carlo stability check")
    common(p)
    p.add_argument("--operator", choices=("autoconvolution", "exponential"), default="autoconvolution")
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--samples", type=int, default=500)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("check-interp", help="interpolation inequalities")
    common(p)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--rho", type=float, nargs="+", default=[0.1, 1.0])
    p.add_argument("--t", type=float, help="index of V in the data scale")
    p.add_argument("--samples", type=int, default=1000)
    p.set_defaults(func=_cmd_interp)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
