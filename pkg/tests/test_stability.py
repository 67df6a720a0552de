import numpy as np
import pytest

from hscale_tikhonov import ForwardProblem, Grid, InvalidParameterError, build_scale_from_operator
from hscale_tikhonov.harness.stability import (check_interpolation_Y, smooth_perturbations,
                                               verify_autoconvolution_stability, verify_exponential_stability)
from hscale_tikhonov.noise import data_scale, rng_for


def test_perturbation_radius(scale256):
    hs = smooth_perturbations(scale256, 1.0, 0.3, 20, rng_for(0))
    norms = [scale256.norm(1.0, h) for h in hs]
    assert max(norms) <= 0.3 * (1 + 1e-12) and min(norms) > 0


def test_zero_perturbation_is_trivial():
    g = Grid(32)
    p = ForwardProblem("autoconvolution", g)
    scale = build_scale_from_operator(p.J, g)
    f = np.ones(32)
    assert scale.norm(-1.0, f - f) == 0.0
    assert g.norm(p.apply(f) - p.apply(f)) == 0.0


def test_autoconvolution_certificate():
    rep = verify_autoconvolution_stability(n=64, tau=1.5, num_samples=200, seed=3)
    assert rep.holds and rep.worst_ratio <= 2.0
    assert rep.worst_identity_error <= 1e-9
    with pytest.raises(InvalidParameterError):
        verify_autoconvolution_stability(tau=2.0)


def test_exponential_certificate():
    rep = verify_exponential_stability(r=0.5, num_samples=100)
    assert rep.holds
    assert rep.c_down >= rep.c_down_exact
    assert np.all(rep.linearization_slack >= -1e-12)
    with pytest.raises(InvalidParameterError):
        verify_exponential_stability(r=0.0)


def test_residual_interpolation_linear(grid256, linear256, scale256, scale_Y256):
    fits = [check_interpolation_Y(linear256, scale_Y256, 0.5, rho, 300, scale=scale256) for rho in (0.1, 1.0)]
    for fit in fits:
        assert fit.finite and fit.C <= 1 + 1e-9
    assert max(f.C for f in fits) <= 2 * min(f.C for f in fits)


@pytest.mark.parametrize("t,s", [(0.25, 0.0), (0.75, 0.0), (0.9, 0.5)])
def test_theta_recovered_in_two_scale_case(linear256, scale256, scale_Y256, t, s):
    # ||J h||_{Y_r} = ||h||_s for r = 1 + s, so theta = 1 - t/r
    r = 1.0 + s
    fit = check_interpolation_Y(linear256, scale_Y256, 1 - t / r, 1.0, 300, s=s, t=t, scale=scale256)
    assert abs(fit.theta_fit - (1 - t / r)) <= 0.15


def test_interpolation_argument_checks(linear256, scale_Y256):
    with pytest.raises(InvalidParameterError):
        check_interpolation_Y(linear256, scale_Y256, 1.0, 1.0, 10)
    with pytest.raises(InvalidParameterError):
        check_interpolation_Y(linear256, scale_Y256, 0.5, 0.0, 10)


def test_data_scale_smoke():
    g = Grid(16)
    assert data_scale(g).is_orthonormal()
