"""Weighted logistic regression fit by damped Newton (IRLS).

Small and self-contained on purpose: the targeting steps need offsets and
case weights, the balancing-score solver needs a maximum-likelihood warm
start, and the population-limit computations need exact control over the
convergence criterion.  scipy/statsmodels wrappers hide one or another of
those knobs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

#: Mean-score convergence threshold.
SCORE_TOL = 1e-9

#: Coefficient magnitude beyond which the fit is treated as separated and
#: restarted with a small ridge penalty.
COEF_BOUND = 30.0

SEPARATION_RIDGE = 1e-6

_MAX_HALVINGS = 30


@dataclass
class LogisticFit:
    coef: np.ndarray
    converged: bool
    separated: bool
    n_iter: int
    max_score: float

    def predict(self, x: np.ndarray, offset: np.ndarray | None = None) -> np.ndarray:
        eta = x @ self.coef
        if offset is not None:
            eta = eta + offset
        return expit(eta)


def _objective(eta, y, w, coef, ridge, wsum):
    # negative mean log-likelihood plus the ridge term, computed stably
    ll = float(np.sum(w * (y * eta - np.logaddexp(0.0, eta))))
    return -ll / wsum + 0.5 * ridge * float(coef @ coef)


def fit_logistic_irls(
    x: np.ndarray,
    y: np.ndarray,
    *,
    weights: np.ndarray | None = None,
    offset: np.ndarray | None = None,
    start: np.ndarray | None = None,
    max_iter: int = 200,
    tol: float = SCORE_TOL,
) -> LogisticFit:
    """Fit ``P(y=1|x) = sigmoid(x @ coef + offset)`` by damped Newton.

    ``weights`` are case weights (any positive scale; the score is normalized
    by their sum).  Convergence is declared when the largest absolute entry
    of the mean score drops to :data:`SCORE_TOL`.  If the coefficients run
    past :data:`COEF_BOUND` — the quasi-separated regime — the fit restarts
    once from zero with a ridge of :data:`SEPARATION_RIDGE` and is flagged.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = x.shape
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)
    off = np.zeros(n) if offset is None else np.asarray(offset, dtype=np.float64)
    wsum = float(w.sum())
    if wsum <= 0.0:
        raise ValueError("weights must have positive sum")

    coef = np.zeros(p) if start is None else np.asarray(start, dtype=np.float64).copy()
    ridge = 0.0
    separated = False
    restarted = False
    converged = False
    max_score = np.inf
    it = 0

    while it < max_iter:
        it += 1
        eta = x @ coef + off
        p_hat = expit(eta)
        score = x.T @ (w * (y - p_hat)) / wsum - ridge * coef
        max_score = float(np.abs(score).max()) if p else 0.0
        if max_score <= tol:
            converged = True
            break

        hw = w * p_hat * (1.0 - p_hat)
        hess = x.T @ (x * hw[:, None]) / wsum + ridge * np.eye(p)
        try:
            delta = np.linalg.solve(hess, score)
        except np.linalg.LinAlgError:
            delta = np.linalg.lstsq(hess, score, rcond=None)[0]

        f0 = _objective(eta, y, w, coef, ridge, wsum)
        step = 1.0
        new = coef + delta
        for _ in range(_MAX_HALVINGS):
            f1 = _objective(x @ new + off, y, w, new, ridge, wsum)
            if np.isfinite(f1) and f1 <= f0 + 1e-12:
                break
            step *= 0.5
            new = coef + step * delta
        coef = new

        if not restarted and np.abs(coef).max() > COEF_BOUND:
            restarted = True
            separated = True
            ridge = SEPARATION_RIDGE
            coef = np.zeros(p)

    return LogisticFit(coef=coef, converged=converged, separated=separated,
                       n_iter=it, max_score=max_score)
