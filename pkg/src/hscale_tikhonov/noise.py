"""Mixed deterministic / white-noise data ``g_obs = g + sigma Z + delta xi``.

White noise is not an element of ``Y`` in the continuum, so it only enters
through pairings ``<Z, g>``.  On the grid a realization is stored as nodal
values ``z_i = zeta_i / sqrt(w_i)`` with i.i.d. standard normal ``zeta``,
which makes ``<z, g> = sum_i w_i z_i g_i`` exactly ``N(0, ||g||^2)``.

Random streams are keyed by ``(seed, trial)`` through
:class:`numpy.random.SeedSequence` spawn keys, so any trial can be
regenerated independently of how a batch of trials was scheduled.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidParameterError
from .operators import ForwardProblem, volterra_matrix
from .scale import Grid, SpectralScale, build_scale_from_operator

__all__ = [
    "Observation",
    "rng_for",
    "sample_white_noise",
    "data_scale",
    "make_xi",
    "make_observation",
    "weak_pair",
    "dual_norm",
    "expected_dual_norm_sq",
]

XI_KINDS = ("rough", "alternating", "smooth")


def rng_for(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the stream ``(seed, *key)``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


def sample_white_noise(grid: Grid, seed: int, trial: int = 0) -> np.ndarray:
    """Discrete Gaussian white noise realization on ``grid``."""
    zeta = rng_for(seed, trial).standard_normal(grid.n)
    return zeta / np.sqrt(grid.weights)


def data_scale(grid: Grid) -> SpectralScale:
    """Hilbert scale on ``Y`` generated by ``(J J*)^{-1/2}``.

    ``Y_t`` for ``t > 1/2`` plays the role of ``V`` in the Gelfand triple
    ``(V, Y, V')``: the embedding is Hilbert-Schmidt since the eigenvalues of
    the generator grow linearly.
    """
    J = volterra_matrix(grid)
    return build_scale_from_operator(grid.adjoint(J), grid)


def make_xi(spec, grid: Grid) -> np.ndarray:
    """Deterministic perturbation ``xi`` with ``||xi||_Y <= 1``.

    ``spec`` is either an array (rescaled only if its norm exceeds one) or a
    profile name:

    ``"rough"``
        ``sum_k k^{-1/2} u_k`` over the eigenvectors of ``J J*``, normalized.
        Its energy is spread over all frequencies, so for every ``alpha``
        it has a component that Tikhonov regularization amplifies by the
        worst-case order ``1/sqrt(alpha)``.
    ``"alternating"``
        ``(-1)^i``, normalized.
    ``"smooth"``
        ``cos(pi t / T)``, normalized.
    """
    if isinstance(spec, str):
        if spec == "rough":
            ds = data_scale(grid)
            k = np.arange(1, grid.n + 1)
            xi = ds.synthesize(k ** -0.5)
        elif spec == "alternating":
            xi = (-1.0) ** np.arange(grid.n)
        elif spec == "smooth":
            xi = np.cos(np.pi * grid.nodes / grid.T)
        else:
            raise ValueError(f"unknown xi profile {spec!r}; expected one of {XI_KINDS}")
        return xi / grid.norm(xi)
    xi = np.array(spec, dtype=float)
    if xi.shape != (grid.n,):
        raise ValueError(f"xi must have length {grid.n}")
    nrm = grid.norm(xi)
    return xi / nrm if nrm > 1.0 else xi


@dataclass(frozen=True, eq=False)
class Observation:
    """Noisy data for one experiment cell.

    ``g_obs`` is available as nodal values even for ``sigma > 0``; it is then
    a discretization artefact whose ``Y``-norm diverges under refinement, and
    only pairings with it are meaningful.
    """

    grid: Grid
    g_dagger: np.ndarray
    xi: np.ndarray
    z: np.ndarray
    delta: float
    sigma: float
    seed: int
    trial: int = 0

    def __post_init__(self):
        for name in ("g_dagger", "xi", "z"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (self.grid.n,):
                raise ValueError(f"{name} must have length {self.grid.n}")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.delta < 0 or self.sigma < 0:
            raise InvalidParameterError("delta and sigma must be nonnegative")
        if self.grid.norm(self.xi) > 1 + 1e-12:
            raise InvalidParameterError("xi must satisfy ||xi||_Y <= 1")

    @property
    def g_obs(self) -> np.ndarray:
        return self.g_dagger + self.sigma * self.z + self.delta * self.xi

    @property
    def is_deterministic(self) -> bool:
        return self.sigma == 0

    def to_csv(self, path) -> None:
        """Write the observation as a flat CSV record (exact float round trip)."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["n", "T", "delta", "sigma", "seed", "trial"])
            out.writerow([self.grid.n, repr(self.grid.T), repr(float(self.delta)),
                          repr(float(self.sigma)), self.seed, self.trial])
            out.writerow(["g_dagger", "xi", "z"])
            for row in zip(self.g_dagger, self.xi, self.z):
                out.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "Observation":
        with Path(path).open(newline="") as fh:
            rows = list(csv.reader(fh))
        n, T, delta, sigma, seed, trial = rows[1]
        data = np.array([[float(v) for v in r] for r in rows[3:]])
        grid = Grid(int(n), float(T))
        return cls(grid, data[:, 0], data[:, 1], data[:, 2], float(delta),
                   float(sigma), int(seed), int(trial))


def make_observation(problem: ForwardProblem, f_dagger, delta: float, sigma: float,
                     xi_spec="rough", seed: int = 0, trial: int = 0) -> Observation:
    """Exact data ``F(f_dagger)`` perturbed by ``sigma Z + delta xi``."""
    if delta < 0 or sigma < 0:
        raise InvalidParameterError(f"delta and sigma must be nonnegative, got {delta}, {sigma}")
    grid = problem.grid
    g = problem.apply(f_dagger)
    xi = make_xi(xi_spec, grid)
    z = sample_white_noise(grid, seed, trial)
    return Observation(grid, g, xi, z, float(delta), float(sigma), int(seed), int(trial))


def weak_pair(obs: Observation, g) -> float:
    """``<g_obs, g> = <g_dagger, g> + delta <xi, g> + sigma <Z, g>``."""
    inner = obs.grid.inner
    return inner(obs.g_dagger, g) + obs.delta * inner(obs.xi, g) + obs.sigma * inner(obs.z, g)


def dual_norm(scale_Y: SpectralScale, t: float, z) -> float:
    """``||z||_{V'}`` for ``V = Y_t``, i.e. the ``-t`` norm of the data scale."""
    return scale_Y.norm(-t, z)


def expected_dual_norm_sq(scale_Y: SpectralScale, t: float) -> float:
    """``E ||Z||_{V'}^2 = trace(iota* Cov[Z] iota) = sum_k lambda_k^{-2t}``."""
    return float(np.sum(scale_Y.eigenvalues ** (-2.0 * t)))
