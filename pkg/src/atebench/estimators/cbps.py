"""Covariate-balancing propensity scores (just-identified).

Solves the inverse-probability balance conditions

    (1/n) sum_i [ t_i / pi_i - (1 - t_i) / (1 - pi_i) ] z_i = 0

for a logistic ``pi``, by damped Newton from the maximum-likelihood start.
At the solution the IPW weights reproduce the covariate means exactly, which
is the property the weighting estimator relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .glm import fit_logistic_irls

#: Largest acceptable absolute balance-moment entry.
BALANCE_TOL = 1e-8

_PI_CLIP = 1e-9
_MAX_HALVINGS = 30


@dataclass
class CbpsFit:
    coef: np.ndarray
    balanced: bool
    n_iter: int
    max_moment: float

    def predict(self, z: np.ndarray) -> np.ndarray:
        return expit(z @ self.coef)


def _moment(z, t, pi):
    w = t / pi - (1.0 - t) / (1.0 - pi)
    return z.T @ w / z.shape[0]


def fit_cbps(z: np.ndarray, t: np.ndarray, *, max_iter: int = 100,
             tol: float = BALANCE_TOL) -> CbpsFit:
    """Fit balancing propensity coefficients; fall back to MLE on failure.

    Returns a fit flagged ``balanced=False`` (with the MLE coefficients) if
    Newton cannot push the balance moments below ``tol``.
    """
    z = np.asarray(z, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    n = z.shape[0]

    mle = fit_logistic_irls(z, t)
    coef = mle.coef.copy()
    pi = np.clip(expit(z @ coef), _PI_CLIP, 1.0 - _PI_CLIP)
    g = _moment(z, t, pi)
    gnorm = float(np.abs(g).max())
    it = 0
    while gnorm > tol and it < max_iter:
        it += 1
        # Jacobian of the moment with respect to the coefficients
        d = -(t * (1.0 - pi) / pi + (1.0 - t) * pi / (1.0 - pi))
        jac = z.T @ (z * d[:, None]) / n
        try:
            delta = np.linalg.solve(jac, g)
        except np.linalg.LinAlgError:
            break
        step = 1.0
        improved = False
        for _ in range(_MAX_HALVINGS):
            cand = coef - step * delta
            pi_c = np.clip(expit(z @ cand), _PI_CLIP, 1.0 - _PI_CLIP)
            g_c = _moment(z, t, pi_c)
            gn_c = float(np.abs(g_c).max())
            if np.isfinite(gn_c) and gn_c < gnorm:
                coef, pi, g, gnorm = cand, pi_c, g_c, gn_c
                improved = True
                break
            step *= 0.5
        if not improved:
            break

    if gnorm <= tol:
        return CbpsFit(coef=coef, balanced=True, n_iter=it, max_moment=gnorm)
    return CbpsFit(coef=mle.coef, balanced=False, n_iter=it, max_moment=gnorm)
