"""Discretized Hilbert scales generated by ``L = (J*J)^{-1/2}``.

Functions on ``[0, T]`` are represented by their values on a uniform midpoint
grid.  The weighted inner product ``<u, v> = sum_i w_i u_i v_i`` is the
discrete ``L^2(0, T)`` product; every adjoint in the package is taken with
respect to it.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DegenerateGeneratorError, InvalidIndicesError

__all__ = [
    "Grid",
    "SpectralScale",
    "InterpolationReport",
    "build_scale_from_operator",
    "apply_power",
    "norm_nu",
    "check_interpolation",
]

_MAX_CONDITION = 1e14
_EIGEN_CLIP = 1e-14


@dataclass(frozen=True)
class Grid:
    """Uniform midpoint grid on ``[0, T]`` with composite midpoint weights."""

    n: int
    T: float = 1.0
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"grid size must be a positive integer, got {self.n!r}")
        if not self.T > 0:
            raise ValueError(f"interval endpoint must be positive, got {self.T!r}")
        h = self.T / self.n
        nodes = (np.arange(self.n) + 0.5) * h
        weights = np.full(self.n, h)
        nodes.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def spacing(self) -> float:
        return self.T / self.n

    def inner(self, u, v) -> float:
        """Weighted inner product ``sum_i w_i u_i v_i``."""
        return float(np.dot(self.weights * np.asarray(u), np.asarray(v)))

    def norm(self, u) -> float:
        u = np.asarray(u)
        return float(np.sqrt(np.dot(self.weights * u, u)))

    def adjoint(self, A: np.ndarray) -> np.ndarray:
        """Matrix of the adjoint of ``A`` in the weighted inner product."""
        w = self.weights
        return (A.T * w[None, :]) / w[:, None]


class InterpolationReport(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


@dataclass(frozen=True, eq=False)
class SpectralScale:
    """Hilbert scale ``X_nu = D(L^nu)`` stored through the eigenpairs of ``L``.

    Parameters
    ----------
    grid : Grid
        The discretization of the underlying space.
    eigenvalues : ndarray
        Eigenvalues of ``L`` in ascending order, all positive.
    eigenvectors : ndarray
        ``n x n`` matrix whose columns are orthonormal in the weighted inner
        product; column ``i`` belongs to ``eigenvalues[i]``.
    """

    grid: Grid
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        V = np.asarray(self.eigenvectors, dtype=float)
        if lam.shape != (self.grid.n,) or V.shape != (self.grid.n, self.grid.n):
            raise ValueError("eigenpairs do not match the grid size")
        if not np.all(lam > 0):
            raise DegenerateGeneratorError("scale generator must be strictly positive")
        lam.flags.writeable = False
        V.flags.writeable = False
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "eigenvectors", V)

    @property
    def m_bound(self) -> float:
        """Lower bound ``m`` with ``||L f|| >= m ||f||``: the least eigenvalue."""
        return float(self.eigenvalues[0])

    @property
    def n(self) -> int:
        return self.grid.n

    def coefficients(self, f) -> np.ndarray:
        """Spectral coefficients ``<f, v_i>`` (works column-wise on 2-D input)."""
        f = np.asarray(f, dtype=float)
        w = self.grid.weights
        wf = w * f if f.ndim == 1 else w[:, None] * f
        return self.eigenvectors.T @ wf

    def synthesize(self, c) -> np.ndarray:
        return self.eigenvectors @ np.asarray(c, dtype=float)

    def power(self, nu: float, f) -> np.ndarray:
        """Apply ``L^nu`` to ``f``."""
        c = self.coefficients(f)
        lam_nu = self.eigenvalues ** nu
        return self.synthesize(lam_nu * c if c.ndim == 1 else lam_nu[:, None] * c)

    def norm(self, nu: float, f) -> float:
        """``||f||_nu = ||L^nu f||``, computed from the spectral coefficients."""
        c = self.coefficients(f)
        return float(np.linalg.norm(self.eigenvalues ** nu * c))

    def power_matrix(self, nu: float) -> np.ndarray:
        """Dense matrix of ``L^nu`` acting on nodal values."""
        V = self.eigenvectors
        return (V * self.eigenvalues ** nu) @ (V.T * self.grid.weights)

    def is_orthonormal(self, tol: float = 1e-10) -> bool:
        V = self.eigenvectors
        gram = V.T @ (self.grid.weights[:, None] * V)
        return bool(np.max(np.abs(gram - np.eye(self.n))) <= tol)


def build_scale_from_operator(J_matrix, grid: Grid) -> SpectralScale:
    """Hilbert scale generated by ``L = (J*J)^{-1/2}``.

    ``J*`` is the weighted adjoint ``W^{-1} J^T W``.  The eigenproblem of
    ``J*J`` is solved on the symmetric matrix ``W^{1/2} J*J W^{-1/2}``, so
    ``L`` has eigenvalues ``1/sigma_i`` where ``sigma_i`` are the singular
    values of ``J`` between the weighted spaces.

    Raises
    ------
    DegenerateGeneratorError
        If ``J`` is singular or its condition number exceeds ``1e14``.
    """
    J = np.asarray(J_matrix, dtype=float)
    n = grid.n
    if J.shape != (n, n):
        raise ValueError(f"expected a {n}x{n} matrix, got shape {J.shape}")
    sw = np.sqrt(grid.weights)
    B = sw[:, None] * J / sw[None, :]
    if not np.all(np.isfinite(B)):
        raise DegenerateGeneratorError("generator matrix has non-finite entries")
    cond = np.linalg.cond(B)
    if not np.isfinite(cond) or cond > _MAX_CONDITION:
        raise DegenerateGeneratorError(
            f"J is singular or nearly so (condition estimate {cond:.3g})")
    S = B.T @ B
    S = 0.5 * (S + S.T)
    mu, U = np.linalg.eigh(S)
    # descending mu <=> ascending eigenvalues of L
    mu, U = mu[::-1], U[:, ::-1]
    mu = np.maximum(mu, _EIGEN_CLIP * mu[0])
    V = U / sw[:, None]
    return SpectralScale(grid, 1.0 / np.sqrt(mu), V)


def apply_power(scale: SpectralScale, nu: float, f) -> np.ndarray:
    """``L^nu f`` for the scale's generator ``L``."""
    return scale.power(nu, f)


def norm_nu(scale: SpectralScale, nu: float, f) -> float:
    """The scale norm ``||f||_nu``."""
    return scale.norm(nu, f)


def check_interpolation(scale: SpectralScale, a: float, t: float, s: float,
                        f) -> InterpolationReport:
    """Evaluate both sides of the interpolation inequality for ``-a <= t <= s``.

    ``||f||_t <= ||f||_{-a}^{(s-t)/(s+a)} ||f||_s^{(t+a)/(s+a)}``

    The endpoint ``t = -a`` is accepted; there the inequality is an identity.
    """
    if not (-a <= t <= s) or not s + a > 0:
        raise InvalidIndicesError(f"need -a <= t <= s and s > -a, got a={a}, t={t}, s={s}")
    lhs = scale.norm(t, f)
    theta_low = (s - t) / (s + a)
    theta_high = (t + a) / (s + a)
    rhs = scale.norm(-a, f) ** theta_low * scale.norm(s, f) ** theta_high
    return InterpolationReport(lhs, rhs, bool(lhs <= rhs * (1 + 1e-9)))
