"""Forward operators on the midpoint grid.

Three operators are provided, all discretized with lower-triangular
left-rectangle quadrature so that ``(Jf)_i = h * sum_{j <= i} f_j``:

* ``linear-integration``: ``F(f) = J f``
* ``exponential-growth``: ``F(f) = c0 * exp(c1 * J f)``
* ``autoconvolution``: ``F(f)(s) = int_0^s f(s - t) f(t) dt``, discretized as
  ``h * sum_{j + k = i} f_j f_k``

With these conventions the autoconvolution derivative at ``f = 1`` is
exactly ``2 J``, which mirrors the continuous identity.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .errors import MagnitudeError
from .scale import Grid

__all__ = [
    "KINDS",
    "ForwardProblem",
    "volterra_matrix",
    "apply",
    "derivative_apply",
    "derivative_adjoint_apply",
    "project_domain",
]

KINDS = ("linear-integration", "exponential-growth", "autoconvolution")
DOMAINS = ("full", "nonnegative")

_EXP_LIMIT = 700.0


def volterra_matrix(grid: Grid) -> np.ndarray:
    """Lower-triangular quadrature matrix of ``(Jf)(t) = int_0^t f``."""
    return grid.spacing * np.tril(np.ones((grid.n, grid.n)))


@dataclass(frozen=True, eq=False)
class ForwardProblem:
    """A forward operator ``F`` together with its domain.

    Parameters
    ----------
    kind : str
        One of :data:`KINDS`.
    grid : Grid
        Discretization shared by ``X`` and ``Y``.
    c0, c1 : float
        Constants of the exponential-growth operator (ignored otherwise).
    domain : {"full", "nonnegative"}
        ``D(F) = X`` or the cone of nonnegative functions.
    """

    kind: str
    grid: Grid
    c0: float = 1.0
    c1: float = 1.0
    domain: str = "full"
    J: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}; expected one of {KINDS}")
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown domain {self.domain!r}; expected one of {DOMAINS}")
        if self.kind == "exponential-growth" and not (self.c0 > 0 and self.c1 > 0):
            raise ValueError("exponential-growth needs c0 > 0 and c1 > 0")
        J = volterra_matrix(self.grid)
        J.flags.writeable = False
        object.__setattr__(self, "J", J)

    @property
    def is_linear(self) -> bool:
        return self.kind == "linear-integration"

    def _exp_argument(self, f):
        arg = self.c1 * (self.J @ f)
        if np.max(arg) > _EXP_LIMIT:
            raise MagnitudeError(
                f"exponent c1*(Jf) reaches {np.max(arg):.4g} > {_EXP_LIMIT}")
        return arg

    def apply(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if self.kind == "linear-integration":
            return self.J @ f
        if self.kind == "exponential-growth":
            return self.c0 * np.exp(self._exp_argument(f))
        return self.grid.spacing * np.convolve(f, f)[: self.grid.n]

    def derivative_apply(self, f, h) -> np.ndarray:
        """Frechet derivative ``F'(f) h``."""
        h = np.asarray(h, dtype=float)
        if self.kind == "linear-integration":
            return self.J @ h
        if self.kind == "exponential-growth":
            return self.c1 * self.apply(f) * (self.J @ h)
        f = np.asarray(f, dtype=float)
        return 2.0 * self.grid.spacing * np.convolve(f, h)[: self.grid.n]

    def derivative_adjoint_apply(self, f, r) -> np.ndarray:
        """``F'(f)* r`` with the adjoint taken in the weighted inner product."""
        r = np.asarray(r, dtype=float)
        w = self.grid.weights
        if self.kind == "linear-integration":
            return (self.J.T @ (w * r)) / w
        if self.kind == "exponential-growth":
            m = self.c1 * self.apply(f)
            return (self.J.T @ (w * m * r)) / w
        f = np.asarray(f, dtype=float)
        n = self.grid.n
        # transpose of the lower Toeplitz matrix with first column f
        wr = w * r
        mt = np.convolve(wr[::-1], f)[:n][::-1]
        return 2.0 * self.grid.spacing * mt / w

    def jacobian(self, f) -> np.ndarray:
        """Dense matrix of ``F'(f)`` acting on nodal values."""
        if self.kind == "linear-integration":
            return np.array(self.J)
        if self.kind == "exponential-growth":
            return (self.c1 * self.apply(f))[:, None] * self.J
        f = np.asarray(f, dtype=float)
        return 2.0 * self.grid.spacing * toeplitz(f, np.zeros(self.grid.n))

    def project_domain(self, f) -> np.ndarray:
        """Nearest point of ``D(F)`` in the weighted ``L^2`` norm."""
        f = np.asarray(f, dtype=float)
        if self.domain == "full":
            return f.copy()
        return np.maximum(f, 0.0)


def apply(problem: ForwardProblem, f) -> np.ndarray:
    return problem.apply(f)


def derivative_apply(problem: ForwardProblem, f, h) -> np.ndarray:
    return problem.derivative_apply(f, h)


def derivative_adjoint_apply(problem: ForwardProblem, f, r) -> np.ndarray:
    return problem.derivative_adjoint_apply(f, r)


def project_domain(problem: ForwardProblem, f) -> np.ndarray:
    return problem.project_domain(f)
