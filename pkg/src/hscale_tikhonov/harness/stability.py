"""Monte Carlo checks of conditional stability and residual interpolation.

All samplers draw perturbations ``h`` in the spectral basis of the ``X``
scale, so their smoothness is controlled directly, and use generators keyed
by ``(seed, stage)``.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import InvalidParameterError
from ..noise import rng_for
from ..operators import ForwardProblem
from ..scale import Grid, SpectralScale, build_scale_from_operator
from .config import ExperimentConfig
from .experiments import make_truth

__all__ = [
    "AutoconvolutionStabilityReport",
    "ExponentialStabilityReport",
    "InterpolationFit",
    "smooth_perturbations",
    "verify_autoconvolution_stability",
    "verify_exponential_stability",
    "check_interpolation_Y",
]


def smooth_perturbations(scale: SpectralScale, nu: float, radius: float, num: int,
                         rng: np.random.Generator) -> np.ndarray:
    """``num`` random vectors (rows) with ``||h||_nu`` uniform in ``(0, radius]``.

    Coefficients are Gaussian with a random power-law decay ``k^{-e}``,
    ``e`` uniform in ``[0.5, 2.5]``, so both rough and smooth shapes occur.
    """
    n = scale.n
    k = np.arange(1, n + 1)
    out = np.empty((num, n))
    for i in range(num):
        c = rng.standard_normal(n) * k ** (-rng.uniform(0.5, 2.5))
        h = scale.synthesize(c)
        out[i] = h * (radius * (1.0 - rng.uniform()) / scale.norm(nu, h))
    return out


def _band_perturbations(scale, nu, radius, num, rng):
    # a few neighbouring modes around a log-uniform centre frequency
    n = scale.n
    out = np.empty((num, n))
    for i in range(num):
        k0 = int(np.exp(rng.uniform(0.0, np.log(n // 2))))
        c = np.zeros(n)
        lo, hi = max(k0 - 2, 0), min(k0 + 3, n)
        c[lo:hi] = rng.standard_normal(hi - lo)
        h = scale.synthesize(c)
        out[i] = h * (radius * (1.0 - rng.uniform()) / scale.norm(nu, h))
    return out


@dataclass
class AutoconvolutionStabilityReport:
    tau: float
    bound: float
    ratios: np.ndarray
    identity_errors: np.ndarray
    violations: int

    @property
    def worst_ratio(self) -> float:
        return float(np.max(self.ratios)) if self.ratios.size else 0.0

    @property
    def worst_identity_error(self) -> float:
        return float(np.max(self.identity_errors)) if self.identity_errors.size else 0.0

    @property
    def holds(self) -> bool:
        return self.violations == 0


def verify_autoconvolution_stability(n: int = 128, tau: float = 1.0, num_samples: int = 500,
                                     seed: int = 0, T: float = 1.0,
                                     rtol: float = 1e-12) -> AutoconvolutionStabilityReport:
    """Sample ``f = 1 + h`` with ``||h||_1 <= tau`` and test

    ``||f - 1||_{-1} <= ||F(f) - F(1)|| / (2 - tau)``.

    ``identity_errors`` holds the relative mismatch of
    ``||h||_{-1} = 1/2 ||F'(1) h||`` for each sample.
    """
    if not 0 < tau < 2:
        raise InvalidParameterError(f"tau must lie in (0, 2), got {tau}")
    grid = Grid(n, T)
    problem = ForwardProblem("autoconvolution", grid)
    scale = build_scale_from_operator(problem.J, grid)
    f_dagger = np.ones(n)
    g_dagger = problem.apply(f_dagger)
    bound = 1.0 / (2.0 - tau)
    hs = smooth_perturbations(scale, 1.0, tau, num_samples, rng_for(seed, 0))
    ratios = np.empty(num_samples)
    ident = np.empty(num_samples)
    for i, h in enumerate(hs):
        lhs = scale.norm(-1.0, h)
        ratios[i] = lhs / grid.norm(problem.apply(f_dagger + h) - g_dagger)
        lin = 0.5 * grid.norm(problem.derivative_apply(f_dagger, h))
        ident[i] = abs(lhs - lin) / lin
    violations = int(np.count_nonzero(ratios > bound * (1.0 + rtol)))
    return AutoconvolutionStabilityReport(tau, bound, ratios, ident, violations)


@dataclass
class ExponentialStabilityReport:
    """Two-stage check of the stability estimate for ``c0 exp(c1 J f)``.

    Stage one estimates ``c_down`` (smallest ``||F'(f†)h|| / ||h||_{-1}``).
    Stage two draws fresh samples and compares
    ``||f - f†||_{-1} / ||F(f) - F(f†)||`` with ``R = (K r + 1)/c_down``.
    ``K`` is the largest ratio
    ``||F(f) - F(f†) - F'(f†)h|| / (||h|| ||F(f) - F(f†)||)`` over both
    stages.  ``c_down_exact = c1 min F(f†)`` is the lower bound available in
    closed form for this operator.
    """

    r: float
    c_down: float
    c_down_exact: float
    K: float
    R: float
    ratios: np.ndarray
    linearization_slack: np.ndarray
    violations: int

    @property
    def worst_ratio(self) -> float:
        return float(np.max(self.ratios)) if self.ratios.size else 0.0

    @property
    def holds(self) -> bool:
        return self.violations == 0


def verify_exponential_stability(config: Optional[ExperimentConfig] = None, r: float = 0.5,
                                 num_samples: int = 200, seed: int = 0,
                                 rtol: float = 1e-12) -> ExponentialStabilityReport:
    """Monte Carlo verification on ``D_r(f†) = {||f - f†|| <= r}``.

    ``config`` supplies the grid, ``c0``, ``c1`` and the truth profile; the
    operator kind is forced to exponential growth.  By default ``f† = 1``.
    """
    if not r > 0:
        raise InvalidParameterError(f"r must be positive, got {r}")
    if config is None:
        from .config import ProblemSpec, TruthSpec
        config = ExperimentConfig(problem=ProblemSpec(kind="exponential-growth"),
                                  truth=TruthSpec(profile="constant"))
    p = config.problem
    grid = Grid(p.n, p.T)
    problem = ForwardProblem("exponential-growth", grid, p.c0, p.c1, p.domain)
    scale = build_scale_from_operator(problem.J, grid)
    f_dagger = make_truth(config, problem, scale)
    g_dagger = problem.apply(f_dagger)

    def terms(h):
        diff = problem.apply(f_dagger + h) - g_dagger
        lin = problem.derivative_apply(f_dagger, h)
        return grid.norm(diff), grid.norm(lin), grid.norm(diff - lin), scale.norm(-1.0, h)

    stage1 = smooth_perturbations(scale, 0.0, r, num_samples, rng_for(seed, 0))
    stage2 = smooth_perturbations(scale, 0.0, r, num_samples, rng_for(seed, 1))
    t1 = np.array([terms(h) for h in stage1])
    t2 = np.array([terms(h) for h in stage2])
    c_down = float(np.min(t1[:, 1] / t1[:, 3]))
    # K is a supremum of the nonlinearity condition over every sampled point
    h_all = np.concatenate([stage1, stage2])
    t_all = np.concatenate([t1, t2])
    hn = np.array([grid.norm(h) for h in h_all])
    K = float(np.max(t_all[:, 2] / (hn * t_all[:, 0])))
    R = (K * r + 1.0) / c_down

    d, lin, neg = t2[:, 0], t2[:, 1], t2[:, 3]
    ratios = neg / d
    # triangle-inequality consequence ||F'(f†)h|| <= (K ||h|| + 1) ||F(f) - F(f†)||
    slack = (K * hn[num_samples:] + 1.0) * d - lin
    violations = int(np.count_nonzero(ratios > R * (1.0 + rtol)))
    c_exact = p.c1 * float(np.min(g_dagger))
    return ExponentialStabilityReport(r, float(c_down), c_exact, float(K), float(R),
                                      ratios, slack, violations)


@dataclass
class InterpolationFit:
    """Smallest ``C`` with ``||F(f) - g†||_V <= C ||F(f) - g†||^theta ||f - f†||_s^(1-theta)``
    over the samples, plus the least-squares ``theta`` from
    ``log(V/S)`` against ``log(Y/S)`` where ``S = ||f - f†||_s``."""

    theta: float
    rho: float
    t: float
    C: float
    theta_fit: float
    samples: int

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.C))


def check_interpolation_Y(problem: ForwardProblem, scale_Y: SpectralScale, theta: float,
                          rho: float, num_samples: int = 500, *, s: float = 0.0,
                          t: Optional[float] = None, f_dagger=None,
                          scale: Optional[SpectralScale] = None,
                          seed: int = 0) -> InterpolationFit:
    """Fit the residual interpolation constant on ``D^s_rho(f†)``.

    ``V`` is the data scale of index ``t``; by default ``t = (1 - theta)(s + 1)``,
    for which the linear integration problem satisfies the inequality with
    ``C = 1``.  Samples are narrow-band so that the ratio ``Y/S`` spreads over
    several decades, which makes ``theta_fit`` well determined.
    """
    if not 0 < theta < 1:
        raise InvalidParameterError(f"theta must lie in (0, 1), got {theta}")
    if not rho > 0:
        raise InvalidParameterError(f"rho must be positive, got {rho}")
    if t is None:
        t = (1.0 - theta) * (s + 1.0)
    grid = problem.grid
    if scale is None:
        scale = build_scale_from_operator(problem.J, grid)
    f_dagger = np.ones(grid.n) if f_dagger is None else np.asarray(f_dagger, dtype=float)
    g_dagger = problem.apply(f_dagger)
    hs = _band_perturbations(scale, s, rho, num_samples, rng_for(seed, 0))
    V = np.empty(num_samples)
    Y = np.empty(num_samples)
    S = np.empty(num_samples)
    for i, h in enumerate(hs):
        diff = problem.apply(f_dagger + h) - g_dagger
        V[i] = scale_Y.norm(t, diff)
        Y[i] = grid.norm(diff)
        S[i] = scale.norm(s, h)
    C = float(np.max(V / (Y ** theta * S ** (1.0 - theta))))
    slope = np.polyfit(np.log(Y / S), np.log(V / S), 1)[0]
    return InterpolationFit(theta, rho, float(t), C, float(slope), num_samples)
