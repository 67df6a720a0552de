"""Monte Carlo look at the stability estimates of the nonlinear operators.

Autoconvolution around the constant one: the negative-norm error is bounded
by the residual divided by ``2 - tau``.  Exponential growth: the constants
``c_down``, ``K`` and ``R`` are estimated from samples and checked on fresh
ones.
"""

from hscale_tikhonov.harness import verify_autoconvolution_stability, verify_exponential_stability

auto = verify_autoconvolution_stability(n=128, tau=1.0, num_samples=500)
print(f"autoconvolution: worst ratio {auto.worst_ratio:.4f} (bound {auto.bound:g}), "
      f"identity error {auto.worst_identity_error:.1e}, violations {auto.violations}")

expo = verify_exponential_stability(r=0.5, num_samples=200)
print(f"exponential growth: c_down {expo.c_down:.4f} (closed form {expo.c_down_exact:.4f}), "
      f"K {expo.K:.4f}, R {expo.R:.4f}, worst ratio {expo.worst_ratio:.4f}, "
      f"violations {expo.violations}")
