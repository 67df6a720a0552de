"""Index functions, rate functions and regularization parameter choice.

For a concave index function ``phi`` and scale indices ``(u, s, a)`` the rate
function is ``psi(t) = phi(sqrt t)^{2(u-s)/(a+u)}``.  The approximation error
enters through

    phi_app(alpha) = (-psi)*(-1/alpha) = sup_{tau >= 0} [psi(tau) - tau/alpha],

which is evaluated here by locating the root of ``psi'(tau) = 1/alpha``.
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import minimize_scalar

from .errors import (DegenerateChoiceError, InvalidGridError,
                     InvalidIndicesError, InvalidParameterError)

__all__ = [
    "IndexFunction",
    "RateFunction",
    "ConjugateValue",
    "psi",
    "fenchel_app",
    "fenchel_app_detail",
    "apriori_alpha_det",
    "lepskij_grid",
    "lepskij_index",
    "lepskij_select",
    "sigma_det",
    "sigma_stoch",
    "invert_increasing",
    "apriori_alpha_stoch",
    "error_bound_det",
]

_BRACKET = (1e-16, 1e16)
_MAX_BISECT = 200
_REL_TOL = 1e-10

_SAMPLE_GRID = np.logspace(-12, 4, 1000)


def _midpoint_concave(fn, grid) -> bool:
    for gap in (1, 10, 100):
        x, y = grid[:-gap], grid[gap:]
        lhs = fn(0.5 * (x + y))
        rhs = 0.5 * (fn(x) + fn(y))
        if not np.all(lhs >= rhs - 1e-12 * np.maximum(1.0, np.abs(rhs))):
            return False
    return True


class IndexFunction:
    """Concave index function ``phi`` with ``phi(0) = 0``.

    Use the constructors :meth:`hoelder`, :meth:`logarithmic` and
    :meth:`table`.  Monotonicity is checked on a sampled log grid at
    construction; concavity is checked there too and recorded in
    :attr:`concave` rather than enforced, since tables may violate it.
    """

    def __init__(self, kind: str, value, derivative, params: dict):
        self.kind = kind
        self._value = value
        self._derivative = derivative
        self.params = dict(params)
        samples = self(_SAMPLE_GRID)
        if not np.all(np.diff(samples) > 0) or abs(float(self(0.0))) > 0:
            raise InvalidParameterError(f"{kind} index function is not strictly increasing from 0")
        self.concave = _midpoint_concave(self, _SAMPLE_GRID)

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items() if k not in ("x", "y"))
        return f"IndexFunction.{self.kind}({args})"

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = self._value(np.maximum(t, 0.0))
        return float(out) if out.ndim == 0 else out

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        out = self._derivative(np.maximum(t, 0.0))
        return float(out) if out.ndim == 0 else out

    @classmethod
    def hoelder(cls, gamma: float) -> "IndexFunction":
        """``phi(t) = t^gamma`` with ``0 < gamma <= 1``."""
        if not 0 < gamma <= 1:
            raise InvalidParameterError(f"Hoelder exponent must lie in (0, 1], got {gamma}")

        def value(t):
            return np.power(t, gamma)

        def derivative(t):
            with np.errstate(divide="ignore"):
                return gamma * np.power(t, gamma - 1.0) if gamma != 1 else np.ones_like(t)

        return cls("hoelder", value, derivative, {"gamma": gamma})

    @classmethod
    def logarithmic(cls, mu: float) -> "IndexFunction":
        """``phi(t) = (ln(3 + 1/t))^{-mu}``, extended by ``phi(0) = 0``."""
        if not mu > 0:
            raise InvalidParameterError(f"logarithmic exponent must be positive, got {mu}")

        def value(t):
            with np.errstate(divide="ignore"):
                return np.where(t > 0, np.log(3.0 + 1.0 / np.where(t > 0, t, 1.0)) ** (-mu), 0.0)

        def derivative(t):
            tt = np.where(t > 0, t, 1.0)
            d = mu * np.log(3.0 + 1.0 / tt) ** (-mu - 1.0) / (tt * (3.0 * tt + 1.0))
            return np.where(t > 0, d, np.inf)

        return cls("logarithmic", value, derivative, {"mu": mu})

    @classmethod
    def table(cls, x: Sequence[float], y: Sequence[float]) -> "IndexFunction":
        """Monotone (PCHIP) interpolation of tabulated values.

        ``x`` must start at 0 with ``y[0] = 0``.  Beyond the last node the
        function continues linearly with the end slope, which keeps a concave
        table concave.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or len(x) < 3:
            raise InvalidParameterError("table needs matching 1-D arrays with at least 3 points")
        if x[0] != 0 or y[0] != 0:
            raise InvalidParameterError("table must start at (0, 0)")
        interp = PchipInterpolator(x, y, extrapolate=False)
        dinterp = interp.derivative()
        x_end, y_end = x[-1], y[-1]
        slope_end = float(dinterp(x_end))

        def value(t):
            inside = np.where(t <= x_end, t, x_end)
            return np.where(t <= x_end, interp(inside), y_end + slope_end * (t - x_end))

        def derivative(t):
            inside = np.where(t <= x_end, t, x_end)
            return np.where(t <= x_end, dinterp(inside), slope_end)

        return cls("table", value, derivative, {"x": x, "y": y})


@dataclass(frozen=True, eq=False)
class RateFunction:
    """``psi_{u,s,a}(t) = phi(sqrt t)^{2(u-s)/(a+u)}``.

    The indices must satisfy ``a >= 0`` and ``0 <= s < u <= 2s + a``.
    """

    base: IndexFunction
    u: float
    s: float
    a: float
    concave: bool = field(init=False)

    def __post_init__(self):
        u, s, a = self.u, self.s, self.a
        if not (a >= 0 and 0 <= s < u <= 2 * s + a):
            raise InvalidIndicesError(
                f"need a >= 0 and 0 <= s < u <= 2s + a, got u={u}, s={s}, a={a}")
        object.__setattr__(self, "concave", self.base.concave and _midpoint_concave(self, _SAMPLE_GRID))

    @property
    def exponent(self) -> float:
        """``2(u-s)/(a+u)``, always in ``(0, 2]``."""
        return 2.0 * (self.u - self.s) / (self.a + self.u)

    @property
    def hoelder_q(self) -> Optional[float]:
        """``q = gamma (u-s)/(a+u)`` for Hoelder ``phi``, else ``None``."""
        if self.base.kind != "hoelder":
            return None
        return self.base.params["gamma"] * (self.u - self.s) / (self.a + self.u)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.power(self.base(np.sqrt(np.maximum(t, 0.0))), self.exponent)
        return float(out) if np.ndim(out) == 0 else out

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        e = self.exponent
        r = np.sqrt(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = e * np.power(self.base(r), e - 1.0) * self.base.derivative(r) / (2.0 * r)
        return float(out) if np.ndim(out) == 0 else out


def psi(rate: RateFunction, t):
    """Evaluate the rate function."""
    return rate(t)


class ConjugateValue(NamedTuple):
    value: float
    maximizer: float
    fallback: bool


def _bisect_log(fn, lo, hi):
    """Root of a decreasing function on a log scale, to relative tolerance."""
    llo, lhi = np.log(lo), np.log(hi)
    for _ in range(_MAX_BISECT):
        if lhi - llo <= _REL_TOL:
            break
        mid = 0.5 * (llo + lhi)
        if fn(np.exp(mid)) > 0:
            llo = mid
        else:
            lhi = mid
    return float(np.exp(0.5 * (llo + lhi)))


def _maximize_golden(rate, alpha):
    taus = np.logspace(-16, 16, 641)
    vals = rate(taus) - taus / alpha
    k = int(np.argmax(vals))
    lo = np.log(taus[max(k - 1, 0)])
    hi = np.log(taus[min(k + 1, len(taus) - 1)])
    res = minimize_scalar(lambda lt: -(rate(np.exp(lt)) - np.exp(lt) / alpha),
                          bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    tau = float(np.exp(res.x))
    value = max(float(rate(tau) - tau / alpha), float(vals[k]), 0.0)
    return ConjugateValue(value, tau, True)


def fenchel_app_detail(rate: RateFunction, alpha: float) -> ConjugateValue:
    """``phi_app(alpha)`` together with the maximizing ``tau``.

    For concave ``psi`` the derivative ``psi'`` is decreasing and the maximizer
    solves ``psi'(tau) = 1/alpha``; it is found by bisection in ``log tau``.
    Otherwise a golden-section search is used and ``fallback`` is set.
    """
    if not alpha > 0:
        raise InvalidParameterError(f"alpha must be positive, got {alpha}")
    if not rate.concave:
        return _maximize_golden(rate, alpha)
    slope = 1.0 / alpha

    def excess(tau):
        return rate.derivative(tau) - slope

    lo, hi = _BRACKET
    while excess(lo) <= 0 and lo > 1e-300:
        lo *= 1e-16
    while excess(hi) > 0 and hi < 1e300:
        hi *= 1e16
    if excess(lo) <= 0:
        return ConjugateValue(0.0, 0.0, False)
    tau = _bisect_log(excess, lo, hi)
    return ConjugateValue(max(float(rate(tau) - tau * slope), 0.0), tau, False)


def fenchel_app(rate: RateFunction, alpha: float) -> float:
    """``sup_{tau >= 0} [psi(tau) - tau/alpha]``."""
    return fenchel_app_detail(rate, alpha).value


def apriori_alpha_det(rate: RateFunction, delta: float) -> float:
    """A priori parameter ``alpha* = 1/psi'(delta^2)``.

    This is the choice ``-1/alpha* in d(-psi)(delta^2)`` for differentiable
    ``psi``.  For Hoelder ``phi`` it equals ``delta^{2(1-q)}/q``.
    """
    if not delta > 0:
        raise InvalidParameterError(f"delta must be positive, got {delta}")
    d = rate.derivative(delta ** 2)
    if not (np.isfinite(d) and d > 0):
        raise DegenerateChoiceError(f"psi'(delta^2) = {d} does not define a parameter")
    return 1.0 / d


def lepskij_grid(delta: float, r: float) -> np.ndarray:
    """Candidates ``alpha_j = delta^2 r^{2j-2}`` up to the first one ``>= 1``."""
    if not (delta > 0 and r > 1):
        raise InvalidParameterError(f"need delta > 0 and r > 1, got delta={delta}, r={r}")
    alphas = [delta ** 2]
    while alphas[-1] < 1.0:
        alphas.append(delta ** 2 * r ** (2 * len(alphas)))
    return np.array(alphas)


def lepskij_index(distances, r: float) -> int:
    """Balancing-principle selection from a matrix of pairwise distances.

    ``distances[i, j]`` is ``||f_i - f_j||_s``.  Returns the largest 0-based
    ``j`` such that ``distances[i, j] <= 4 r^{-i}`` for every ``i <= j``
    (``4 r^{1-i}`` in 1-based numbering).  Index 0 always qualifies.
    """
    D = np.asarray(distances, dtype=float)
    m = D.shape[0]
    thresholds = 4.0 * r ** (-np.arange(m, dtype=float))
    chosen = 0
    for j in range(1, m):
        if np.all(D[: j + 1, j] <= thresholds[: j + 1]):
            chosen = j
    return chosen


def lepskij_select(alphas, solutions, delta: float, r: float, scale, s: float) -> int:
    """Lepskii choice among ``solutions`` computed for the candidate ``alphas``.

    ``alphas`` must match :func:`lepskij_grid` ``(delta, r)``.  Returns the
    0-based index of the selected candidate.
    """
    alphas = np.asarray(alphas, dtype=float)
    expected = lepskij_grid(delta, r)
    if alphas.shape != expected.shape or not np.allclose(alphas, expected, rtol=1e-12, atol=0):
        raise InvalidGridError(
            f"candidate grid does not follow alpha_j = delta^2 r^(2j-2) up to alpha_m >= 1")
    if len(solutions) != len(alphas):
        raise InvalidGridError("one solution per candidate parameter is required")
    m = len(alphas)
    D = np.zeros((m, m))
    for j in range(m):
        for i in range(j):
            D[i, j] = D[j, i] = scale.norm(s, np.asarray(solutions[i]) - np.asarray(solutions[j]))
    return lepskij_index(D, r)


def sigma_det(rate: RateFunction, alpha: float) -> float:
    """``Sigma(alpha) = sqrt(alpha) sqrt(phi_app(alpha))``."""
    return float(np.sqrt(alpha * fenchel_app(rate, alpha)))


def sigma_stoch(rate: RateFunction, alpha: float, theta: float) -> float:
    """``Sigma~(alpha) = alpha^{1 - theta/2} sqrt(phi_app(alpha))``."""
    return float(alpha ** (1.0 - 0.5 * theta) * np.sqrt(fenchel_app(rate, alpha)))


def invert_increasing(fn, target: float) -> float:
    """Solve ``fn(alpha) = target`` for a strictly increasing ``fn`` by bisection."""
    if not target > 0:
        raise InvalidParameterError(f"target must be positive, got {target}")
    lo, hi = _BRACKET
    while fn(lo) >= target and lo > 1e-300:
        lo *= 1e-16
    while fn(hi) <= target and hi < 1e300:
        hi *= 1e16
    return _bisect_log(lambda x: target - fn(x), lo, hi)


def apriori_alpha_stoch(rate: RateFunction, delta: float, sigma: float, theta: float) -> float:
    """``alpha = Sigma^{-1}(delta) + Sigma~^{-1}(sigma)``; a zero level drops its term."""
    if delta < 0 or sigma < 0 or (delta == 0 and sigma == 0):
        raise InvalidParameterError("need delta, sigma >= 0, not both zero")
    if not 0 < theta < 1:
        raise InvalidParameterError(f"theta must lie in (0, 1), got {theta}")
    alpha = 0.0
    if delta > 0:
        alpha += invert_increasing(lambda x: sigma_det(rate, x), delta)
    if sigma > 0:
        alpha += invert_increasing(lambda x: sigma_stoch(rate, x, theta), sigma)
    return alpha


def error_bound_det(rate: RateFunction, delta: float, alpha: float, C: float) -> float:
    """``delta^2/alpha + C (-psi)*(-1/(8 C alpha)) = delta^2/alpha + C phi_app(8 C alpha)``."""
    if not (alpha > 0 and C > 0) or delta < 0:
        raise InvalidParameterError("need alpha, C > 0 and delta >= 0")
    return delta ** 2 / alpha + C * fenchel_app(rate, 8.0 * C * alpha)
