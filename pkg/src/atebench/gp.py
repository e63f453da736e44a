"""Gaussian-process draws for the numeric-covariate effect functions.

Each mechanism coefficient that multiplies a numeric covariate is a random
function materialized once on the full numeric grid: a draw from a GP with
linear mean ``gamma' x`` and squared-exponential covariance
``eta * exp(-rho * ||x_i - x_j||^2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: Cholesky jitter ladder, relative to eta: start, multiplier, cap.
JITTER_START = 1e-10
JITTER_GROWTH = 10.0
JITTER_MAX = 1e-4


class GpFactorError(RuntimeError):
    """Covariance could not be factorized even at the maximum jitter."""


@dataclass(frozen=True)
class GridFunction:
    """A function materialized as its values on the numeric grid."""

    values: np.ndarray = field(repr=False)  # (n_grid,) float64

    @property
    def n_grid(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class GpSpec:
    """Hyperparameters plus the linear-mean coefficients for one draw."""

    eta: float
    rho: float
    mean_coefficients: np.ndarray = field(repr=False)  # (h,) float64


def gp_covariance(grid_points: np.ndarray, eta: float, rho: float) -> np.ndarray:
    """Squared-exponential covariance matrix on the grid.

    ``K[i, j] = eta * exp(-rho * ||x_i - x_j||^2)`` — note the *squared*
    Euclidean distance in the exponent.  The result is exactly symmetric by
    construction and positive semi-definite up to rounding.
    """
    pts = np.asarray(grid_points, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError("grid_points must be 2-d (n_grid, h)")
    if eta <= 0.0 or rho <= 0.0:
        raise ValueError("eta and rho must be positive")
    diff = pts[:, None, :] - pts[None, :, :]
    sq_dist = np.einsum("ijk,ijk->ij", diff, diff)
    return eta * np.exp(-rho * sq_dist)


def _jittered_cholesky(cov: np.ndarray, eta: float) -> np.ndarray:
    """Lower Cholesky factor with an escalating diagonal jitter.

    Starts at ``1e-10 * eta`` and multiplies by 10 up to ``1e-4 * eta``;
    raises :class:`GpFactorError` if the matrix still fails to factorize.
    """
    jitter = JITTER_START * eta
    eye = np.eye(cov.shape[0])
    while True:
        try:
            return np.linalg.cholesky(cov + jitter * eye)
        except np.linalg.LinAlgError:
            jitter *= JITTER_GROWTH
            if jitter > JITTER_MAX * eta * (1.0 + 1e-12):
                raise GpFactorError(
                    f"covariance not factorizable at maximum jitter {JITTER_MAX * eta:g}"
                ) from None


def sample_gp_function(
    spec: GpSpec, grid_points: np.ndarray, rng: np.random.Generator
) -> GridFunction:
    """Draw one function on the grid: ``gamma' x + L z`` with ``z ~ N(0, I)``.

    ``L`` is the jittered Cholesky factor of the squared-exponential
    covariance.  Consumes exactly ``n_grid`` standard normals from ``rng``.
    """
    pts = np.asarray(grid_points, dtype=np.float64)
    gamma = np.asarray(spec.mean_coefficients, dtype=np.float64)
    if gamma.shape != (pts.shape[1],):
        raise ValueError("mean_coefficients must have one entry per numeric covariate")
    factor = _jittered_cholesky(gp_covariance(pts, spec.eta, spec.rho), spec.eta)
    z = rng.standard_normal(pts.shape[0])
    return GridFunction(values=pts @ gamma + factor @ z)


def draw_gp_spec(eta: float, rho: float, h: int, rng: np.random.Generator) -> GpSpec:
    """Draw the linear-mean coefficients (one standard normal per covariate)."""
    return GpSpec(eta=eta, rho=rho, mean_coefficients=rng.standard_normal(h))


class GpSampler:
    """Repeated GP draws on a fixed grid with a cached Cholesky factor.

    The mechanism samplers draw one function per interaction term, all with
    the same hyperparameters, so the factorization is done once.  Each draw
    consumes ``h`` normals for the mean coefficients followed by ``n_grid``
    normals for the path, matching :func:`draw_gp_spec` +
    :func:`sample_gp_function` exactly.
    """

    def __init__(self, grid_points: np.ndarray, eta: float, rho: float):
        self.grid_points = np.asarray(grid_points, dtype=np.float64)
        self.eta = float(eta)
        self.rho = float(rho)
        self._factor: np.ndarray | None = None

    @property
    def factor(self) -> np.ndarray:
        if self._factor is None:
            cov = gp_covariance(self.grid_points, self.eta, self.rho)
            self._factor = _jittered_cholesky(cov, self.eta)
        return self._factor

    def draw(self, rng: np.random.Generator) -> GridFunction:
        gamma = rng.standard_normal(self.grid_points.shape[1])
        z = rng.standard_normal(self.grid_points.shape[0])
        return GridFunction(values=self.grid_points @ gamma + self.factor @ z)
