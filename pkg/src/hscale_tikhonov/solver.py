"""Minimization of the Tikhonov functionals with an ``s``-norm penalty.

Deterministic data (``sigma = 0``)::

    T_alpha(f) = 1/2 ||F(f) - g_delta||^2 + alpha ||f||_s^2

Stochastic data, where only pairings with ``g_obs`` exist::

    S_alpha(f) = 1/2 ||F(f)||^2 - <F(f), g_obs> + alpha ||f||_s^2

Both share the gradient ``F'(f)*(F(f) - g_obs) + 2 alpha L^{2s} f`` and differ
by the constant ``1/2 ||g_obs||^2``.  The iteration works in the spectral
coordinates ``c = Lambda^s V* f`` (so the penalty is ``alpha |c|^2``) and uses
Gauss-Newton steps whose damped normal equations are solved by conjugate
gradients, with an Armijo gradient step as fallback.

Stationarity is measured by the gradient in these coordinates, which is
``||L^{-s} grad||`` (the plain ``L^2`` gradient norm when ``s = 0``).  The
``L^2`` gradient itself carries the factor ``L^{2s}`` and, for large ``s``,
amplifies rounding in ``f`` far above any useful tolerance.  On the
nonnegative domain the ``L^2`` projected-gradient map is used instead.
"""

from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Union

import numpy as np
from scipy.sparse.linalg import cg

from .errors import InvalidParameterError, MagnitudeError, WrongModelError
from .noise import Observation, rng_for, weak_pair
from .operators import ForwardProblem
from .scale import SpectralScale

__all__ = [
    "SolveConfig",
    "RegularizedSolution",
    "objective_det",
    "objective_stoch",
    "gradient",
    "solve",
]

_ARMIJO = 1e-4
_MAX_BACKTRACK = 40


@dataclass(frozen=True)
class SolveConfig:
    """Parameters of a single regularized solve.

    ``objective`` selects the functional: ``"det"``, ``"stoch"`` or ``"auto"``
    (deterministic exactly when the observation has ``sigma = 0``).
    ``initial_guess`` is ``"zero"``, a constant, or an array of nodal values.
    Note that ``f = 0`` is stationary for the autoconvolution functional.
    ``multistart`` adds that many random smooth starting points to the
    initial guess; the lowest final objective wins.
    """

    alpha: float
    s: float = 0.0
    max_outer_iterations: int = 100
    gradient_tolerance: float = 1e-10
    inner_tolerance: float = 1e-12
    max_inner_iterations: Optional[int] = None
    initial_guess: Union[str, float, np.ndarray] = "zero"
    objective: str = "auto"
    multistart: int = 0
    multistart_seed: int = 0

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidParameterError(f"alpha must be positive, got {self.alpha}")
        if self.s < 0:
            raise InvalidParameterError(f"penalty index s must be >= 0, got {self.s}")
        if not (self.gradient_tolerance > 0 and self.inner_tolerance > 0):
            raise InvalidParameterError("tolerances must be positive")
        if self.objective not in ("auto", "det", "stoch"):
            raise ValueError(f"unknown objective {self.objective!r}")


@dataclass
class RegularizedSolution:
    f_hat: np.ndarray
    objective_value: float
    gradient_norm: float
    iterations: int
    converged: bool
    residual_norm: Optional[float] = None
    message: str = ""
    start: int = 0
    history: list = field(default_factory=list, repr=False)


def _check_det(obs: Observation):
    if obs.sigma > 0:
        raise WrongModelError("the deterministic functional needs sigma = 0; use objective_stoch")


def objective_det(problem: ForwardProblem, scale: SpectralScale, obs: Observation,
                  f, alpha: float, s: float) -> float:
    """``1/2 ||F(f) - g_delta||_Y^2 + alpha ||f||_s^2``."""
    _check_det(obs)
    resid = problem.apply(f) - obs.g_obs
    return 0.5 * problem.grid.norm(resid) ** 2 + alpha * scale.norm(s, f) ** 2


def objective_stoch(problem: ForwardProblem, scale: SpectralScale, obs: Observation,
                    f, alpha: float, s: float) -> float:
    """``1/2 ||F(f)||_Y^2 - <F(f), g_obs> + alpha ||f||_s^2`` with a weak pairing."""
    Ff = problem.apply(f)
    return 0.5 * problem.grid.norm(Ff) ** 2 - weak_pair(obs, Ff) + alpha * scale.norm(s, f) ** 2


def gradient(problem: ForwardProblem, scale: SpectralScale, obs: Observation,
             f, alpha: float, s: float) -> np.ndarray:
    """Gradient in the weighted inner product (identical for both functionals)."""
    f = np.asarray(f, dtype=float)
    resid = problem.apply(f) - obs.g_obs
    return problem.derivative_adjoint_apply(f, resid) + 2.0 * alpha * scale.power(2.0 * s, f)


def _stationarity(problem, grad, f) -> float:
    # projected-gradient map for the nonnegative cone
    return problem.grid.norm(f - problem.project_domain(f - grad))


class _Run(NamedTuple):
    f: np.ndarray
    phi: float
    gnorm: float
    iterations: int
    converged: bool
    message: str
    history: list


class _Iteration:
    """State shared by the Gauss-Newton loop for one start."""

    def __init__(self, problem, scale, obs, config):
        self.problem = problem
        self.scale = scale
        self.alpha = config.alpha
        self.s = config.s
        self.data = obs.g_obs
        self.sw = np.sqrt(problem.grid.weights)
        lam = scale.eigenvalues
        self.P = scale.eigenvectors * lam ** (-config.s)
        self.lam_s = lam ** config.s
        self.config = config
        self.obs = obs

    def to_coeffs(self, f):
        return self.lam_s * self.scale.coefficients(f)

    def value(self, c):
        f = self.P @ c
        r = self.problem.apply(f) - self.data
        return 0.5 * float(np.dot(self.sw * r, self.sw * r)) + self.alpha * float(c @ c), f, r

    def project(self, c):
        if self.problem.domain == "full":
            return c
        return self.to_coeffs(self.problem.project_domain(self.P @ c))

    def run(self, c):
        cfg = self.config
        problem = self.problem
        n = problem.grid.n
        maxiter = cfg.max_inner_iterations or 10 * n
        phi, f, r = self.value(c)
        history = []
        message = "maximum iterations reached"
        converged = False
        it = 0
        refined = False
        while True:
            B = self.sw[:, None] * (problem.jacobian(f) @ self.P)
            gc = B.T @ (self.sw * r) + 2.0 * self.alpha * c
            if problem.domain == "full":
                gnorm = float(np.linalg.norm(gc))
            else:
                grad_f = problem.derivative_adjoint_apply(f, r) + 2.0 * self.alpha * self.scale.power(2.0 * self.s, f)
                gnorm = _stationarity(problem, grad_f, f)
            history.append((phi, gnorm))
            converged = gnorm <= cfg.gradient_tolerance
            if converged:
                message = "gradient tolerance reached"
                # one extra Gauss-Newton step acts as iterative refinement
                if refined or gnorm == 0:
                    break
                refined = True
            elif it >= cfg.max_outer_iterations:
                message = "maximum iterations reached"
                break
            M = B.T @ B
            M[np.diag_indices_from(M)] += 2.0 * self.alpha
            step, _ = cg(M, -gc, rtol=cfg.inner_tolerance, atol=0.0, maxiter=maxiter)
            accepted = self._line_search(c, phi, gc, step)
            if accepted is None:
                accepted = self._line_search(c, phi, gc, -gc)
            if accepted is None:
                if not converged:
                    message = "no descent step found"
                break
            c, phi, f, r = accepted
            it += 1
        return _Run(f, phi, gnorm, it, converged, message, history)

    def _line_search(self, c, phi, gc, direction):
        slope = float(gc @ direction)
        if not slope < 0:
            return None
        slack = 1e-14 * max(abs(phi), 1e-300)
        t = 1.0
        for _ in range(_MAX_BACKTRACK):
            trial = self.project(c + t * direction)
            try:
                val, f, r = self.value(trial)
            except OverflowError:
                val = np.inf
            if np.isfinite(val) and val <= phi + _ARMIJO * t * slope + slack:
                return trial, val, f, r
            t *= 0.5
        return None


def _starts(problem, scale, config):
    n = problem.grid.n
    if isinstance(config.initial_guess, str):
        if config.initial_guess != "zero":
            raise ValueError(f"unknown initial guess rule {config.initial_guess!r}")
        starts = [np.zeros(n)]
    elif np.ndim(config.initial_guess) == 0:
        starts = [problem.project_domain(np.full(n, float(config.initial_guess)))]
    else:
        f0 = np.asarray(config.initial_guess, dtype=float)
        if f0.shape != (n,):
            raise ValueError(f"initial guess must have length {n}")
        starts = [problem.project_domain(f0)]
    k = np.arange(1, n + 1)
    for i in range(config.multistart):
        coeffs = rng_for(config.multistart_seed, i).standard_normal(n) / k ** 2
        starts.append(problem.project_domain(scale.synthesize(coeffs)))
    return starts


def solve(problem: ForwardProblem, scale: SpectralScale, obs: Observation,
          config: SolveConfig) -> RegularizedSolution:
    """Regularized solution for the selected Tikhonov functional.

    Non-convergence is reported through ``converged=False`` and ``message``;
    the best iterate found is still returned.
    """
    kind = config.objective
    if kind == "auto":
        kind = "det" if obs.sigma == 0 else "stoch"
    if kind == "det":
        _check_det(obs)
    loop = _Iteration(problem, scale, obs, config)
    runs, failures = [], []
    for idx, f0 in enumerate(_starts(problem, scale, config)):
        try:
            runs.append((idx, loop.run(loop.to_coeffs(f0))))
        except OverflowError as exc:
            failures.append(str(exc))
    if not runs:
        raise MagnitudeError(failures[0])
    # prefer converged runs, then the lowest objective
    idx, run = max(runs, key=lambda item: (item[1].converged, -item[1].phi))
    f, gnorm, it, converged, message, history = (
        run.f, run.gnorm, run.iterations, run.converged, run.message, run.history)
    f = np.array(f)
    if kind == "det":
        value = objective_det(problem, scale, obs, f, config.alpha, config.s)
        resid = problem.grid.norm(problem.apply(f) - obs.g_obs)
    else:
        value = objective_stoch(problem, scale, obs, f, config.alpha, config.s)
        resid = None
    return RegularizedSolution(f, value, gnorm, it, converged, resid, message, idx, history)


def with_alpha(config: SolveConfig, alpha: float) -> SolveConfig:
    return replace(config, alpha=alpha)
