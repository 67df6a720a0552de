"""Acceptance criteria 1-10.

Each criterion is a plain function returning ``(passed, detail)``.  Under
pytest every criterion prints one PASS/FAIL line (collected again in the
terminal summary); ``python tests/test_acceptance.py`` runs them standalone.
"""

import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from hscale_tikhonov import ForwardProblem, Grid, SolveConfig, build_scale_from_operator, make_observation, solve
from hscale_tikhonov.harness.config import ExperimentConfig, NoisePlan, RuleSpec
from hscale_tikhonov.harness.experiments import (build_context, run_lepskij_experiment, run_rate_experiment,
                                                 run_stochastic_experiment)
from hscale_tikhonov.harness.stability import check_interpolation_Y, verify_autoconvolution_stability
from hscale_tikhonov.noise import data_scale, sample_white_noise
from hscale_tikhonov.rates import IndexFunction, RateFunction, fenchel_app
from hscale_tikhonov.scale import check_interpolation
from hscale_tikhonov.solver import gradient, objective_det, objective_stoch

sys.path.insert(0, str(Path(__file__).parent))
from conftest import ACCEPTANCE_LINES  # noqa: E402

RESULTS = {}


def _random_indices(rng):
    gamma = rng.uniform(0.1, 1.0)
    a = rng.uniform(0.2, 3.0)
    s = rng.uniform(0.0, 2.0)
    u = rng.uniform(s + 0.05 * (s + a), 2 * s + a)
    return gamma, u, s, a


def criterion_1():
    """Hoelder conjugate against its closed form, 20 random tuples, < 1 s."""
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        gamma, u, s, a = _random_indices(rng)
        rate = RateFunction(IndexFunction.hoelder(gamma), u=u, s=s, a=a)
        q = rate.hoelder_q
        alpha = 10.0 ** rng.uniform(-6, 1)
        exact = (1 - q) * q ** (q / (1 - q)) * alpha ** (q / (1 - q))
        worst = max(worst, abs(fenchel_app(rate, alpha) - exact) / exact)
    elapsed = time.perf_counter() - start
    return worst <= 1e-8 and elapsed < 1.0, f"max rel. error {worst:.2e}, {elapsed:.2f} s"


def criterion_2():
    """Linear benchmark slope in [0.40, 0.60], < 30 s at n = 256."""
    start = time.perf_counter()
    rep = run_rate_experiment(ExperimentConfig())
    elapsed = time.perf_counter() - start
    ok = rep.slope is not None and 0.40 <= rep.slope <= 0.60 and elapsed < 30 and rep.failed == 0
    return ok, f"slope {rep.slope:.4f} (theory {rep.theory:.2f}) over {rep.levels} levels, {elapsed:.1f} s"


def criterion_3():
    """Balancing principle within 3r of the best candidate for every delta, r = 2, < 2 min."""
    start = time.perf_counter()
    r = 2.0
    rep = run_lepskij_experiment(ExperimentConfig(rule=RuleSpec(name="lepskij", r=r)))
    elapsed = time.perf_counter() - start
    worst = max(tr.ratio for tr in rep.trace)
    return worst <= 3 * r and elapsed < 120, f"worst selected/best ratio {worst:.3f} (bound {3 * r:g}), {elapsed:.1f} s"


def criterion_4():
    """Iterative solve vs dense weighted normal equations, 50 random (alpha, s, delta), < 30 s."""
    rng = np.random.default_rng(4)
    ctx = build_context(ExperimentConfig())
    problem, scale = ctx.problem, ctx.scale
    W = np.diag(problem.grid.weights)
    J = problem.J
    start = time.perf_counter()
    worst = 0.0
    for trial in range(50):
        alpha = 10.0 ** rng.uniform(-8, 0)
        s = rng.uniform(0.0, 1.5)
        delta = 10.0 ** rng.uniform(-5, -1)
        obs = make_observation(problem, ctx.f_dagger, delta, 0.0, seed=4, trial=trial)
        sol = solve(problem, scale, obs, SolveConfig(alpha=alpha, s=s))
        A = J.T @ W @ J + 2 * alpha * W @ scale.power_matrix(2 * s)
        ref = np.linalg.solve(A, J.T @ W @ obs.g_obs)
        worst = max(worst, scale.norm(s, sol.f_hat - ref) / scale.norm(s, ref))
    elapsed = time.perf_counter() - start
    return worst <= 1e-7 and elapsed < 30, f"max rel. s-norm mismatch {worst:.2e}, {elapsed:.1f} s"


def criterion_5():
    """Central differences (eps = 1e-6) against the analytic gradient, 50 points per kind and objective."""
    rng = np.random.default_rng(5)
    grid = Grid(32)
    scale = build_scale_from_operator(ForwardProblem("linear-integration", grid).J, grid)
    eps = 1e-6
    worst = {}
    for kind in ("linear-integration", "exponential-growth", "autoconvolution"):
        problem = ForwardProblem(kind, grid)
        f_true = 1.0 + 0.5 * np.sin(2 * np.pi * grid.nodes)
        for name, sigma, objective in (("det", 0.0, objective_det), ("stoch", 1e-2, objective_stoch)):
            obs = make_observation(problem, f_true, 1e-2, sigma, seed=5)
            errs = []
            for _ in range(50):
                f = f_true + 0.3 * scale.synthesize(rng.standard_normal(32) / np.arange(1, 33))
                alpha = 10.0 ** rng.uniform(-4, 0)
                s = rng.uniform(0.0, 1.0)
                grad = gradient(problem, scale, obs, f, alpha, s)
                fd = np.empty(32)
                for i in range(32):
                    e = np.zeros(32)
                    e[i] = eps
                    fd[i] = (objective(problem, scale, obs, f + e, alpha, s)
                             - objective(problem, scale, obs, f - e, alpha, s)) / (2 * eps)
                # partial derivatives are w_i times the weighted gradient
                errs.append(grid.norm(fd / grid.weights - grad) / grid.norm(grad))
            worst[f"{kind}/{name}"] = max(errs)
    top = max(worst.values())
    return top <= 1e-5, f"max rel. error {top:.2e} ({max(worst, key=worst.get)})"


def criterion_6():
    """White-noise pairings: covariance within 5 %, mean within 4 standard errors, 1e5 draws."""
    grid = Grid(64)
    t = grid.nodes
    g1, g2 = np.sin(np.pi * t), t
    Z = np.array([sample_white_noise(grid, 6, k) for k in range(100_000)])
    X = np.column_stack([(Z * grid.weights) @ g1, (Z * grid.weights) @ g2])
    cov = np.cov(X, rowvar=False)
    target = np.array([[grid.inner(g1, g1), grid.inner(g1, g2)], [grid.inner(g2, g1), grid.inner(g2, g2)]])
    cov_err = float(np.max(np.abs(cov - target) / np.abs(target)))
    z_scores = np.abs(X.mean(axis=0)) / (X.std(axis=0, ddof=1) / np.sqrt(len(X)))
    ok = cov_err <= 0.05 and np.all(z_scores <= 4)
    return ok, f"max rel. covariance error {cov_err:.3%}, mean z-scores {np.round(z_scores, 2).tolist()}"


def criterion_7():
    """Autoconvolution stability with tau = 1, 500 samples, identity to 1e-9, < 10 s."""
    start = time.perf_counter()
    rep = verify_autoconvolution_stability(n=128, tau=1.0, num_samples=500, seed=7)
    elapsed = time.perf_counter() - start
    ok = rep.violations == 0 and rep.worst_ratio <= 1.0 and rep.worst_identity_error <= 1e-9 and elapsed < 10
    return ok, (f"worst ratio {rep.worst_ratio:.4f} <= 1, identity error {rep.worst_identity_error:.1e}, "
                f"{elapsed:.2f} s")


def criterion_8():
    """Interpolation in X (1000 samples, no violations) and a stable residual constant across rho."""
    rng = np.random.default_rng(8)
    ctx = build_context(ExperimentConfig())
    scale = ctx.scale
    violations = 0
    for _ in range(1000):
        a = rng.uniform(0.0, 3.0)
        s = rng.uniform(0.0, 3.0)
        if s + a < 1e-3:
            s += 0.5
        t = rng.uniform(-a, s)
        c = rng.standard_normal(scale.n) * np.arange(1, scale.n + 1) ** (-rng.uniform(0.0, 3.0))
        violations += not check_interpolation(scale, a, t, s, scale.synthesize(c)).holds
    fits = [check_interpolation_Y(ctx.problem, data_scale(ctx.problem.grid), 0.5, rho, 500,
                                  f_dagger=ctx.f_dagger, scale=scale, seed=8) for rho in (0.1, 1.0)]
    Cs = [f.C for f in fits]
    stable = all(np.isfinite(Cs)) and max(Cs) <= 2 * min(Cs)
    return violations == 0 and stable, f"{violations} violations in 1000; C(0.1) = {Cs[0]:.4f}, C(1) = {Cs[1]:.4f}"


def criterion_9():
    """sigma = 0 reproduces the deterministic pipeline; median error monotone in sigma, < 5 min."""
    start = time.perf_counter()
    base = ExperimentConfig(rule=RuleSpec(name="apriori-stoch", theta=0.5),
                            noise=NoisePlan(deltas=[1e-2, 1e-3, 1e-4], sigmas=[0.0], replications=2))
    identical = run_stochastic_experiment(base).to_csv() == run_rate_experiment(base).to_csv()
    cfg = replace(base, noise=NoisePlan(deltas=[1e-8], sigmas=[1e-2, 1e-3, 1e-4], replications=20))
    rep = run_stochastic_experiment(cfg)
    _, med = rep.level_medians()
    monotone = len(med) == 3 and bool(np.all(np.diff(med) <= 0)) and rep.failed == 0
    elapsed = time.perf_counter() - start
    return identical and monotone and elapsed < 300, (
        f"byte-identical {identical}; medians {np.array2string(med, precision=4)} "
        f"(slope {rep.slope:.3f} vs theory {rep.theory:.3f}), {elapsed:.1f} s")


def criterion_10():
    """Approximation-error function: nonnegative, nondecreasing, scaling bound, vanishing at 0."""
    rng = np.random.default_rng(10)
    rates = [RateFunction(IndexFunction.hoelder(1.0), u=1.0, s=0.0, a=1.0),
             RateFunction(IndexFunction.logarithmic(1.0), u=1.5, s=0.5, a=1.0)]
    for _ in range(8):
        gamma, u, s, a = _random_indices(rng)
        rates.append(RateFunction(IndexFunction.hoelder(gamma), u=u, s=s, a=a))
    alphas = np.logspace(-10, 2, 121)
    bad = {"a": 0, "b": 0, "c": 0, "d": 0}
    for rate in rates:
        vals = np.array([fenchel_app(rate, al) for al in alphas])
        bad["a"] += int(np.sum(vals < 0))
        bad["b"] += int(np.sum(np.diff(vals) < -1e-12 * np.abs(vals[1:])))
        p = (rate.u - rate.s) / (rate.a + rate.s)
        for _ in range(50):
            C = 10.0 ** rng.uniform(-3, 3)
            al = 10.0 ** rng.uniform(-8, 1)
            bound = max(1.0, C ** p) * fenchel_app(rate, al) * (1 + 1e-8)
            bad["c"] += int(fenchel_app(rate, C * al) > bound + 1e-300)
        small = [fenchel_app(rate, al) for al in (1e-6, 1e-9, 1e-12)]
        bad["d"] += int(not (small[0] >= small[1] >= small[2]))
    bad["d"] += int(not fenchel_app(rates[0], 1e-12) <= 1e-3)
    return sum(bad.values()) == 0, "violations per property " + ", ".join(f"({k}) {v}" for k, v in bad.items())


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def _line(number, passed, detail):
    return f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {detail}"


@pytest.mark.parametrize("number", range(1, 11))
def test_acceptance(number):
    passed, detail = CRITERIA[number - 1]()
    line = _line(number, passed, detail)
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert passed, line


if __name__ == "__main__":
    failures = 0
    for k, fn in enumerate(CRITERIA, 1):
        ok, detail = fn()
        failures += not ok
        print(_line(k, ok, detail), flush=True)
    sys.exit(1 if failures else 0)
