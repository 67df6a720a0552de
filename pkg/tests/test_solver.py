from dataclasses import replace

import numpy as np
import pytest

from hscale_tikhonov import (ForwardProblem, Grid, InvalidParameterError, MagnitudeError, SolveConfig,
                             WrongModelError, build_scale_from_operator, make_observation, solve)
from hscale_tikhonov.rates import IndexFunction, RateFunction, apriori_alpha_det
from hscale_tikhonov.solver import gradient, objective_det, objective_stoch


def dense_oracle(problem, scale, obs, alpha, s):
    # weighted normal equations  J*J f + 2 alpha L^{2s} f = J* g
    g = problem.grid
    W = np.diag(g.weights)
    J = problem.J
    A = J.T @ W @ J + 2 * alpha * W @ scale.power_matrix(2 * s)
    return np.linalg.solve(A, J.T @ W @ obs.g_obs)


@pytest.mark.parametrize("s", [0.0, 0.5, 1.0, 1.7])
@pytest.mark.parametrize("alpha", [1e-1, 1e-4, 1e-7])
def test_linear_matches_dense_oracle(linear256, scale256, s, alpha):
    f = np.sin(3 * linear256.grid.nodes)
    obs = make_observation(linear256, f, 1e-3, 0.0)
    sol = solve(linear256, scale256, obs, SolveConfig(alpha=alpha, s=s))
    ref = dense_oracle(linear256, scale256, obs, alpha, s)
    assert sol.converged
    assert scale256.norm(s, sol.f_hat - ref) <= 1e-7 * scale256.norm(s, ref)
    assert sol.residual_norm == pytest.approx(linear256.grid.norm(linear256.apply(sol.f_hat) - obs.g_obs))


def spectral_oracle(problem, scale, obs, alpha, s):
    # the same normal equations in the coordinates c = Lambda^s V* W f
    sw = np.sqrt(problem.grid.weights)
    lam_s = scale.eigenvalues ** (-s)
    B = (sw[:, None] * problem.J @ scale.eigenvectors) * lam_s
    c = np.linalg.solve(B.T @ B + 2 * alpha * np.eye(len(lam_s)), B.T @ (sw * obs.g_obs))
    return scale.eigenvectors @ (lam_s * c)


@pytest.mark.parametrize("s", [2.0, 2.5])
def test_linear_large_s_matches_spectral_oracle(linear256, scale256, s):
    # the nodal normal equations lose about lambda_max^{2s} in conditioning here
    obs = make_observation(linear256, np.sin(3 * linear256.grid.nodes), 1e-3, 0.0)
    for alpha in (1e-1, 1e-6):
        sol = solve(linear256, scale256, obs, SolveConfig(alpha=alpha, s=s))
        ref = spectral_oracle(linear256, scale256, obs, alpha, s)
        assert sol.converged
        assert scale256.norm(s, sol.f_hat - ref) <= 1e-8 * scale256.norm(s, ref)


def test_objectives_differ_by_constant(small, rng):
    grid, problems, scale = small
    p = problems["exponential-growth"]
    obs = make_observation(p, np.ones(32), 1e-2, 0.0)
    f1, f2 = 0.3 * rng.standard_normal(32), 0.3 * rng.standard_normal(32)
    d1 = objective_det(p, scale, obs, f1, 0.1, 0.5) - objective_stoch(p, scale, obs, f1, 0.1, 0.5)
    d2 = objective_det(p, scale, obs, f2, 0.1, 0.5) - objective_stoch(p, scale, obs, f2, 0.1, 0.5)
    assert d1 == pytest.approx(0.5 * grid.norm(obs.g_obs) ** 2, rel=1e-10)
    assert d1 == pytest.approx(d2, rel=1e-10)


def test_det_objective_refuses_white_noise(small):
    _, problems, scale = small
    p = problems["linear-integration"]
    obs = make_observation(p, np.ones(32), 1e-2, 1e-3)
    with pytest.raises(WrongModelError):
        objective_det(p, scale, obs, np.ones(32), 0.1, 0.0)
    with pytest.raises(WrongModelError):
        solve(p, scale, obs, SolveConfig(alpha=0.1, objective="det"))
    sol = solve(p, scale, obs, SolveConfig(alpha=0.1))
    assert sol.residual_norm is None and sol.converged


def test_sigma_zero_objectives_give_identical_iterates(linear256, scale256):
    obs = make_observation(linear256, np.cos(linear256.grid.nodes), 1e-3, 0.0)
    a = solve(linear256, scale256, obs, SolveConfig(alpha=1e-3, objective="det"))
    b = solve(linear256, scale256, obs, SolveConfig(alpha=1e-3, objective="stoch"))
    np.testing.assert_array_equal(a.f_hat, b.f_hat)


def test_gradient_vanishes_at_solution(small):
    _, problems, scale = small
    p = problems["exponential-growth"]
    obs = make_observation(p, 1 + 0.5 * np.sin(2 * np.pi * p.grid.nodes), 1e-3, 0.0)
    sol = solve(p, scale, obs, SolveConfig(alpha=1e-4, s=0.5))
    assert sol.converged and sol.gradient_norm <= 1e-10
    # the reported norm is ||L^{-s} grad||
    grad = gradient(p, scale, obs, sol.f_hat, 1e-4, 0.5)
    assert scale.norm(-0.5, grad) == pytest.approx(sol.gradient_norm, rel=1e-3, abs=1e-13)


def test_autoconvolution_recovers_constant():
    g = Grid(128)
    p = ForwardProblem("autoconvolution", g, domain="nonnegative")
    scale = build_scale_from_operator(p.J, g)
    rate = RateFunction(IndexFunction.hoelder(1.0), u=1.0, s=0.0, a=1.0)
    obs = make_observation(p, np.ones(128), 1e-6, 0.0)
    sol = solve(p, scale, obs, SolveConfig(alpha=apriori_alpha_det(rate, 1e-6), initial_guess=0.5))
    assert sol.converged
    assert g.norm(sol.f_hat - 1.0) <= 0.05
    assert np.all(sol.f_hat >= 0)


def test_zero_is_stationary_for_autoconvolution():
    g = Grid(32)
    p = ForwardProblem("autoconvolution", g)
    scale = build_scale_from_operator(p.J, g)
    obs = make_observation(p, np.ones(32), 1e-3, 0.0)
    sol = solve(p, scale, obs, SolveConfig(alpha=1e-3))
    np.testing.assert_array_equal(sol.f_hat, 0.0)
    # multistart escapes the saddle at zero and reports the winning start
    ms = solve(p, scale, obs, SolveConfig(alpha=1e-3, multistart=4))
    assert ms.objective_value < sol.objective_value
    assert ms.start > 0


def test_nonconvergence_is_reported(linear256, scale256):
    obs = make_observation(linear256, np.ones(256), 1e-3, 0.0)
    sol = solve(linear256, scale256, obs, SolveConfig(alpha=1e-3, max_outer_iterations=0))
    assert not sol.converged
    assert sol.message == "maximum iterations reached"


def test_overflow_in_every_start_raises():
    g = Grid(16)
    p = ForwardProblem("exponential-growth", g, c1=1000.0)
    scale = build_scale_from_operator(p.J, g)
    obs = make_observation(p, np.zeros(16), 1e-3, 0.0)
    with pytest.raises(MagnitudeError):
        solve(p, scale, obs, SolveConfig(alpha=1e-3, initial_guess=1.0))


@pytest.mark.parametrize("kwargs", [dict(alpha=0.0), dict(alpha=1.0, s=-1.0),
                                    dict(alpha=1.0, gradient_tolerance=0.0),
                                    dict(alpha=1.0, objective="other")])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SolveConfig(**kwargs)


def test_bad_initial_guess(small):
    _, problems, scale = small
    p = problems["linear-integration"]
    obs = make_observation(p, np.ones(32), 1e-3, 0.0)
    with pytest.raises(ValueError):
        solve(p, scale, obs, SolveConfig(alpha=1.0, initial_guess="random"))
    with pytest.raises(ValueError):
        solve(p, scale, obs, SolveConfig(alpha=1.0, initial_guess=np.ones(3)))
    with pytest.raises(InvalidParameterError):
        SolveConfig(alpha=-1.0)


def test_objective_examples(small, rng):
    _, problems, scale = small
    p = problems["exponential-growth"]
    f_true = 1 + 0.5 * np.sin(2 * np.pi * p.grid.nodes)
    exact = make_observation(p, f_true, 0.0, 0.0)
    assert objective_det(p, scale, exact, f_true, 0.3, 0.5) == pytest.approx(
        0.3 * scale.norm(0.5, f_true) ** 2, rel=1e-12)
    f = rng.standard_normal(32)
    obs = make_observation(p, f_true, 1e-2, 0.0)
    d = objective_det(p, scale, obs, f, 0.7, 0.5) - objective_det(p, scale, obs, f, 0.2, 0.5)
    assert d == pytest.approx(0.5 * scale.norm(0.5, f) ** 2, rel=1e-10)
    direct = 0.5 * p.grid.norm(p.apply(f) - obs.g_obs) ** 2 + 0.2 * scale.norm(0.5, f) ** 2
    assert objective_det(p, scale, obs, f, 0.2, 0.5) == pytest.approx(direct, rel=1e-12)
    # F(0) = 0 for the integration operator, so only the penalty remains
    lin = problems["linear-integration"]
    noisy = make_observation(lin, f_true, 1e-2, 1e-3)
    assert objective_stoch(lin, scale, noisy, np.zeros(32), 0.2, 0.5) == 0.0


def test_gradient_examples(linear256, scale256, small):
    obs = make_observation(linear256, np.sin(3 * linear256.grid.nodes), 1e-3, 0.0)
    ref = dense_oracle(linear256, scale256, obs, 1e-3, 0.5)
    grad = gradient(linear256, scale256, obs, ref, 1e-3, 0.5)
    assert scale256.norm(-0.5, grad) <= 1e-8
    _, problems, scale = small
    for p in problems.values():
        f_true = 1 + 0.5 * np.sin(2 * np.pi * p.grid.nodes)
        exact = make_observation(p, f_true, 0.0, 0.0)
        assert np.max(np.abs(gradient(p, scale, exact, f_true, 0.0, 0.5))) <= 1e-13


def _solves(small):
    _, problems, scale = small
    rate = RateFunction(IndexFunction.hoelder(1.0), u=1.0, s=0.0, a=1.0)
    for kind in ("linear-integration", "exponential-growth"):
        p = problems[kind]
        f_true = 1 + 0.5 * np.sin(2 * np.pi * p.grid.nodes)
        for delta in (1e-2, 1e-3, 1e-4):
            obs = make_observation(p, f_true, delta, 0.0)
            alpha = apriori_alpha_det(rate, delta)
            s = 0.5 if kind == "linear-integration" else 0.0
            sol = solve(p, scale, obs, SolveConfig(alpha=alpha, s=s, initial_guess=1.0))
            assert sol.converged
            yield p, scale, obs, f_true, alpha, s, sol


def test_minimizing_property(small):
    for p, scale, obs, f_true, alpha, s, sol in _solves(small):
        assert sol.objective_value <= objective_det(p, scale, obs, f_true, alpha, s) + 1e-9


def test_residual_bound_chain(small):
    # 1/4 ||F(f) - g†||^2 <= 1/2 ||F(f) - g_obs||^2 + 1/2 delta^2 <= delta^2 + alpha (||f†||^2 - ||f||^2)
    for p, scale, obs, f_true, alpha, s, sol in _solves(small):
        lhs = 0.25 * p.grid.norm(p.apply(sol.f_hat) - obs.g_dagger) ** 2
        rhs = obs.delta ** 2 + alpha * (scale.norm(s, f_true) ** 2 - scale.norm(s, sol.f_hat) ** 2)
        assert lhs <= rhs + 1e-9


@pytest.mark.parametrize("alpha,s", [(1e-2, 0.0), (1e-4, 0.5), (1e-6, 1.0)])
def test_linear_solution_is_stable_under_data_perturbation(linear256, scale256, rng, alpha, s):
    grid = linear256.grid
    sw = np.sqrt(grid.weights)
    W = np.diag(grid.weights)
    A = linear256.J.T @ W @ linear256.J + 2 * alpha * W @ scale256.power_matrix(2 * s)
    R = np.linalg.solve(A, linear256.J.T @ W)
    bound = np.linalg.norm(sw[:, None] * R / sw[None, :], 2)
    obs = make_observation(linear256, np.sin(3 * grid.nodes), 1e-3, 0.0)
    base = solve(linear256, scale256, obs, SolveConfig(alpha=alpha, s=s)).f_hat
    for _ in range(5):
        eta = 1e-3 * rng.standard_normal(grid.n)
        moved = replace(obs, g_dagger=obs.g_dagger + eta)
        shifted = solve(linear256, scale256, moved, SolveConfig(alpha=alpha, s=s)).f_hat
        assert grid.norm(shifted - base) <= 2 * bound * grid.norm(eta)


def test_penalty_dominance(linear256, scale256):
    obs = make_observation(linear256, np.sin(3 * linear256.grid.nodes), 1e-2, 0.0)
    sol = solve(linear256, scale256, obs, SolveConfig(alpha=1e6))
    assert linear256.grid.norm(sol.f_hat) <= 1e-2
