"""Noise-level sweeps, parameter rules and empirical rate fits.

A sweep is a set of independent cells keyed by ``(delta index, sigma index,
replication)``.  Each cell builds its observation, chooses ``alpha``, solves
and records error norms.  The white-noise draw of a cell depends only on
``(base_seed, replication)``, so all noise levels of one replication share
the same realization (common random numbers).  Cells may run in a process
pool; results are always assembled in sorted key order, so the report and
its CSV do not depend on scheduling.
"""

import csv
import io
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional

import numpy as np

from ..errors import InvalidParameterError, MagnitudeError
from ..noise import data_scale, make_observation, rng_for
from ..operators import ForwardProblem
from ..rates import (IndexFunction, RateFunction, apriori_alpha_det, apriori_alpha_stoch,
                     lepskij_grid, lepskij_select)
from ..scale import Grid, SpectralScale, build_scale_from_operator
from ..solver import SolveConfig, solve
from .config import ExperimentConfig

__all__ = [
    "CSV_HEADER",
    "ExperimentContext",
    "RateRow",
    "LepskijTrace",
    "RateReport",
    "build_context",
    "make_truth",
    "make_rate",
    "choose_alpha",
    "observe",
    "solve_config",
    "fit_slope",
    "run_rate_experiment",
    "run_stochastic_experiment",
    "run_lepskij_experiment",
]

CSV_HEADER = ("delta", "sigma", "rep", "alpha", "err_s", "err_neg_a", "resid_Y",
              "iters", "converged", "seed")


@dataclass(frozen=True, eq=False)
class ExperimentContext:
    """Immutable objects shared by all cells of a sweep."""

    config: ExperimentConfig
    problem: ForwardProblem
    scale: SpectralScale
    scale_Y: SpectralScale
    rate: RateFunction
    f_dagger: np.ndarray


@dataclass
class RateRow:
    delta: float
    sigma: float
    rep: int
    alpha: float
    err_s: float
    err_neg_a: float
    resid_Y: float
    iters: int
    converged: bool
    seed: int
    norm_s: float = float("nan")
    z_dual: float = float("nan")
    start: int = 0
    message: str = ""

    def csv_fields(self):
        return [repr(float(self.delta)), repr(float(self.sigma)), str(self.rep),
                repr(float(self.alpha)), repr(float(self.err_s)), repr(float(self.err_neg_a)),
                repr(float(self.resid_Y)), str(self.iters), str(int(self.converged)), str(self.seed)]


@dataclass
class LepskijTrace:
    """Candidates and errors for one noise level of a balancing-principle run."""

    delta: float
    rep: int
    alphas: np.ndarray
    errors: np.ndarray
    selected: int
    best: int

    @property
    def ratio(self) -> float:
        """Selected error over the best error on the grid."""
        return float(self.errors[self.selected] / self.errors[self.best])


@dataclass
class RateReport:
    """Rows of a sweep plus the empirical rate fit.

    ``slope`` is the least-squares slope of ``log median err_s`` against the
    log noise level (``delta``, or ``sigma`` for stochastic sweeps) over the
    levels with at least one converged solve.  It is ``None`` with fewer than
    two such levels.
    """

    kind: str
    rows: List[RateRow]
    slope: Optional[float]
    slope_stderr: Optional[float]
    intercept: Optional[float]
    theory: Optional[float]
    failed: int
    levels: int
    variable: str = "delta"
    trace: List[LepskijTrace] = field(default_factory=list)

    @property
    def gap(self) -> Optional[float]:
        if self.slope is None or self.theory is None:
            return None
        return self.slope - self.theory

    def level_medians(self, converged_only: bool = True):
        """``(levels, median err_s)`` sorted by decreasing noise level."""
        return _level_medians(self.rows, self.variable, converged_only)

    def to_csv(self, path=None) -> str:
        """CSV text with the fixed header; also written to ``path`` if given."""
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(CSV_HEADER)
        for row in self.rows:
            out.writerow(row.csv_fields())
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def plot(self, path) -> None:
        """Log-log scatter of ``err_s`` with fitted and theoretical lines (SVG)."""
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        x = np.array([getattr(r, self.variable) for r in self.rows])
        y = np.array([r.err_s for r in self.rows])
        ok = np.array([r.converged for r in self.rows]) & (x > 0) & (y > 0)
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.loglog(x[ok], y[ok], "o", ms=4, label="runs")
        if (~ok).any() and (x[~ok] > 0).any():
            ax.loglog(x[~ok], np.maximum(y[~ok], 1e-300), "x", label="not converged")
        if self.slope is not None:
            xs = np.array([x[ok].min(), x[ok].max()])
            ax.loglog(xs, np.exp(self.intercept) * xs ** self.slope,
                      "-", label=f"fit, slope {self.slope:.3f}")
            if self.theory is not None:
                xm = np.exp(np.mean(np.log(xs)))
                ym = np.exp(self.intercept) * xm ** self.slope
                ax.loglog(xs, ym * (xs / xm) ** self.theory, "--",
                          label=f"theory, slope {self.theory:.3f}")
        ax.set_xlabel(self.variable)
        ax.set_ylabel("error in the s-norm")
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg")
        plt.close(fig)

    def summary(self) -> str:
        def fmt(v):
            return "n/a" if v is None else f"{v:.4f}"
        return (f"{self.kind}: {len(self.rows)} runs over {self.levels} levels, "
                f"{self.failed} not converged; slope {fmt(self.slope)} "
                f"(stderr {fmt(self.slope_stderr)}), theory {fmt(self.theory)}, gap {fmt(self.gap)}")


def make_rate(config: ExperimentConfig) -> RateFunction:
    spec = config.index_function
    if spec.kind == "hoelder":
        base = IndexFunction.hoelder(spec.gamma)
    elif spec.kind == "logarithmic":
        base = IndexFunction.logarithmic(spec.mu)
    else:
        raise InvalidParameterError(f"unknown index function kind {spec.kind!r}")
    idx = config.indices
    return RateFunction(base, idx.u, idx.s, idx.a)


def make_truth(config: ExperimentConfig, problem: ForwardProblem, scale: SpectralScale) -> np.ndarray:
    """Exact solution for the configured profile.

    ``"spectral"`` is ``L^{-u} w`` where ``w`` has unit norm and coefficients
    ``+-k^{-1/2}`` with random signs, so ``||f||_u = 1`` exactly.
    """
    truth = config.truth
    profile = truth.profile
    if profile == "auto":
        profile = {"linear-integration": "spectral", "autoconvolution": "constant",
                   "exponential-growth": "sine"}[problem.kind]
    t = problem.grid.nodes
    if profile == "spectral":
        n = problem.grid.n
        signs = rng_for(truth.seed).choice([-1.0, 1.0], size=n)
        c = signs * np.arange(1, n + 1) ** -0.5
        c /= np.linalg.norm(c)
        return scale.synthesize(scale.eigenvalues ** (-config.indices.u) * c)
    if profile == "constant":
        return np.ones_like(t)
    if profile == "sine":
        return 1.0 + 0.5 * np.sin(2.0 * np.pi * t / problem.grid.T)
    if profile == "values":
        if truth.values is None or len(truth.values) != problem.grid.n:
            raise InvalidParameterError(f"truth.values must list {problem.grid.n} nodal values")
        return np.array(truth.values, dtype=float)
    raise InvalidParameterError(f"unknown truth profile {truth.profile!r}")


def build_context(config: ExperimentConfig) -> ExperimentContext:
    p = config.problem
    grid = Grid(p.n, p.T)
    problem = ForwardProblem(p.kind, grid, p.c0, p.c1, p.domain)
    scale = build_scale_from_operator(problem.J, grid)
    f_dagger = make_truth(config, problem, scale)
    return ExperimentContext(config, problem, scale, data_scale(grid), make_rate(config), f_dagger)


def solve_config(config: ExperimentConfig, kind: str, alpha: float) -> SolveConfig:
    spec = config.solver
    guess = spec.initial_guess
    if guess == "auto":
        guess = 0.5 if kind == "autoconvolution" else "zero"
    return SolveConfig(alpha=alpha, s=config.indices.s,
                       max_outer_iterations=spec.max_outer_iterations,
                       gradient_tolerance=spec.gradient_tolerance,
                       inner_tolerance=spec.inner_tolerance,
                       initial_guess=guess, multistart=spec.multistart,
                       multistart_seed=spec.multistart_seed)


def choose_alpha(config: ExperimentConfig, rate: RateFunction, delta: float, sigma: float) -> float:
    """A priori parameter for the configured rule, times ``rule.alpha_scale``."""
    rule = config.rule
    if rule.name == "apriori-det":
        if sigma > 0:
            raise InvalidParameterError("apriori-det needs sigma = 0; use apriori-stoch")
        alpha = apriori_alpha_det(rate, delta)
    elif rule.name == "apriori-stoch":
        alpha = apriori_alpha_stoch(rate, delta, sigma, rule.theta)
    else:
        raise InvalidParameterError(f"rule {rule.name!r} is not an a priori rule")
    return rule.alpha_scale * alpha


def _record(ctx, delta, sigma, rep, alpha, sol, z_dual=float("nan")) -> RateRow:
    cfg = ctx.config
    err = sol.f_hat - ctx.f_dagger
    resid = ctx.problem.apply(sol.f_hat) - ctx.problem.apply(ctx.f_dagger)
    return RateRow(delta, sigma, rep, alpha,
                   err_s=ctx.scale.norm(cfg.indices.s, err),
                   err_neg_a=ctx.scale.norm(-cfg.indices.a, err),
                   resid_Y=ctx.problem.grid.norm(resid),
                   iters=sol.iterations, converged=sol.converged, seed=cfg.noise.base_seed,
                   norm_s=ctx.scale.norm(cfg.indices.s, sol.f_hat), z_dual=z_dual,
                   start=sol.start, message=sol.message)


def observe(ctx: ExperimentContext, delta: float, sigma: float, rep: int):
    """Observation of one cell; the white-noise stream is ``(base_seed, rep)``."""
    noise = ctx.config.noise
    return make_observation(ctx.problem, ctx.f_dagger, delta, sigma, noise.xi,
                            seed=noise.base_seed, trial=rep)


def _solve_cell(ctx, delta, sigma, rep, objective):
    obs = observe(ctx, delta, sigma, rep)
    alpha = choose_alpha(ctx.config, ctx.rate, delta, sigma)
    cfg = solve_config(ctx.config, ctx.problem.kind, alpha)
    if objective == "stoch":
        cfg = replace(cfg, objective="stoch")
    try:
        sol = solve(ctx.problem, ctx.scale, obs, cfg)
    except MagnitudeError as exc:
        nan = float("nan")
        return RateRow(delta, sigma, rep, alpha, nan, nan, nan, 0, False,
                       ctx.config.noise.base_seed, message=str(exc))
    z_dual = float("nan")
    if objective == "stoch":
        z_dual = ctx.scale_Y.norm(-ctx.config.noise.v_index, obs.z)
    return _record(ctx, delta, sigma, rep, alpha, sol, z_dual)


def _lepskij_cell(ctx, delta, rep):
    cfg = ctx.config
    obs = observe(ctx, delta, 0.0, rep)
    alphas = lepskij_grid(delta, cfg.rule.r)
    sols = [solve(ctx.problem, ctx.scale, obs, solve_config(cfg, ctx.problem.kind, a))
            for a in alphas]
    j = lepskij_select(alphas, [s.f_hat for s in sols], delta, cfg.rule.r,
                       ctx.scale, cfg.indices.s)
    errors = np.array([ctx.scale.norm(cfg.indices.s, s.f_hat - ctx.f_dagger) for s in sols])
    row = _record(ctx, delta, 0.0, rep, float(alphas[j]), sols[j])
    row.converged = all(s.converged for s in sols)
    return row, LepskijTrace(delta, rep, alphas, errors, j, int(np.argmin(errors)))


# process-pool plumbing: the context is built once per worker
_WORKER_CTX = None


def _init_worker(config):
    global _WORKER_CTX
    _WORKER_CTX = build_context(config)


def _run_task(task):
    mode, key, args = task
    if mode == "lepskij":
        return key, _lepskij_cell(_WORKER_CTX, *args)
    return key, _solve_cell(_WORKER_CTX, *args, objective=mode)


def _run_cells(config, tasks):
    if config.workers == 1 or len(tasks) == 1:
        _init_worker(config)
        results = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=config.workers, initializer=_init_worker,
                                 initargs=(config,)) as pool:
            results = list(pool.map(_run_task, tasks))
    return [value for _, value in sorted(results, key=lambda kv: kv[0])]


def _level_medians(rows, variable, converged_only=True):
    levels = sorted({getattr(r, variable) for r in rows}, reverse=True)
    out_x, out_y = [], []
    for lv in levels:
        errs = [r.err_s for r in rows
                if getattr(r, variable) == lv and (r.converged or not converged_only)]
        if errs:
            out_x.append(lv)
            out_y.append(float(np.median(errs)))
    return np.array(out_x), np.array(out_y)


def fit_slope(x, y):
    """OLS of ``log y`` on ``log x``: ``(slope, stderr, intercept)``.

    Needs at least two points; the standard error needs three.
    """
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0) & np.isfinite(y)
    lx, ly = np.log(x[keep]), np.log(y[keep])
    if lx.size < 2 or np.ptp(lx) == 0:
        return None, None, None
    A = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    stderr = None
    if lx.size > 2:
        resid = ly - A @ coef
        s2 = float(resid @ resid) / (lx.size - 2)
        stderr = float(np.sqrt(s2 / np.sum((lx - lx.mean()) ** 2)))
    return float(coef[0]), stderr, float(coef[1])


def _theory(config, rate, variable):
    q = rate.hoelder_q
    if q is None:
        return None
    if variable == "delta":
        return q
    e = q / (2.0 * (1.0 - q))
    return e / (1.0 - 0.5 * config.rule.theta + e)


def _report(kind, config, rate, rows, variable, trace=()):
    x, y = _level_medians(rows, variable)
    slope, stderr, intercept = fit_slope(x, y)
    failed = sum(not r.converged for r in rows)
    return RateReport(kind, list(rows), slope, stderr, intercept, _theory(config, rate, variable),
                      failed, int(np.count_nonzero(x > 0)), variable, list(trace))


def _emit(report, config):
    if config.output.csv:
        report.to_csv(config.output.csv)
    if config.output.plot:
        report.plot(config.output.plot)
    return report


def run_rate_experiment(config: ExperimentConfig) -> RateReport:
    """Deterministic sweep over ``delta x sigma x replication``.

    Uses the a priori rule of the configuration; the objective is the
    deterministic one whenever ``sigma = 0``.
    """
    noise = config.noise
    keys = list(itertools.product(range(len(noise.deltas)), range(len(noise.sigmas)),
                                  range(noise.replications)))
    tasks = [("auto", k, (noise.deltas[k[0]], noise.sigmas[k[1]], k[2])) for k in keys]
    rows = _run_cells(config, tasks)
    ctx_rate = make_rate(config)
    return _emit(_report("rates", config, ctx_rate, rows, "delta"), config)


def run_stochastic_experiment(config: ExperimentConfig) -> RateReport:
    """White-noise sweep with the stochastic functional and ``apriori-stoch``.

    The slope is fitted against ``sigma``.  Each row carries the dual norm
    ``||Z||_{V'}`` with ``V`` the data scale of index ``noise.v_index``.
    """
    if config.rule.name != "apriori-stoch":
        raise InvalidParameterError("the stochastic sweep needs rule apriori-stoch")
    noise = config.noise
    keys = list(itertools.product(range(len(noise.deltas)), range(len(noise.sigmas)),
                                  range(noise.replications)))
    tasks = [("stoch", k, (noise.deltas[k[0]], noise.sigmas[k[1]], k[2])) for k in keys]
    rows = _run_cells(config, tasks)
    variable = "sigma" if len(noise.sigmas) > 1 else "delta"
    return _emit(_report("stoch", config, make_rate(config), rows, variable), config)


def run_lepskij_experiment(config: ExperimentConfig) -> RateReport:
    """Balancing-principle sweep; ``report.trace`` holds every candidate error."""
    if config.rule.name != "lepskij":
        raise InvalidParameterError("the balancing-principle sweep needs rule lepskij")
    noise = config.noise
    if any(sig != 0 for sig in noise.sigmas):
        raise InvalidParameterError("the balancing principle is run with sigma = 0")
    keys = list(itertools.product(range(len(noise.deltas)), range(noise.replications)))
    tasks = [("lepskij", k, (noise.deltas[k[0]], k[1])) for k in keys]
    results = _run_cells(config, tasks)
    rows = [r for r, _ in results]
    trace = [t for _, t in results]
    return _emit(_report("lepskij", config, make_rate(config), rows, "delta", trace), config)
