"""Average-treatment-effect estimators with influence-function intervals.

Five entries, spanning the usual bias/robustness trade-offs:

- ``gcomp``: per-arm main-effects logistic regression, standardized.
- ``iptw_cbps``: Hajek weighting with covariate-balancing propensity scores.
- ``aipw``: augmented IPW with stacked nuisance fits.
- ``tmle``: targeted maximum likelihood with stacked nuisance fits.
- ``cvtmle``: cross-fitted TMLE (shared folds for both nuisances, pooled
  targeting step).

Every estimator returns a point estimate, an influence-function standard
error (``sd / sqrt(n)`` with ddof=1) and a Wald interval.  Estimators raise
:class:`EstimatorError` when they cannot produce a defensible answer; the
harness records those as failures rather than silently imputing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logit

from ..datagen import Dataset
from .cbps import fit_cbps
from .glm import fit_logistic_irls
from .superlearner import (
    SlError,
    default_n_folds,
    fit_crossfit_super_learner,
    fit_super_learner,
    stratified_folds,
)

#: Two-sided 95% critical value used for every interval.
Z_CRIT = 1.959964

#: Estimated propensities are clamped into this range before weighting.
G_CLIP = (0.001, 0.999)

#: A targeted fit is accepted once the mean of the efficient influence
#: function is at most this.
EIF_TOL = 1e-6

_M_CLIP = 1e-12


class EstimatorError(RuntimeError):
    """The estimator could not produce an estimate on this dataset."""


@dataclass
class NuisanceFit:
    """Per-row nuisance values for the doubly robust estimators.

    ``m_hat[t]`` is the outcome regression evaluated at treatment ``t`` for
    every row; ``g_hat`` is the fitted probability of treatment.
    """

    m_hat: np.ndarray  # (2, n)
    g_hat: np.ndarray  # (n,)
    fold_assignment: np.ndarray | None = None
    learner_weights: dict | None = None


@dataclass
class EstimateResult:
    estimator_id: str
    point: float
    se: float
    ci_low: float
    ci_high: float
    diagnostics: dict = field(default_factory=dict)


def _result(name: str, point: float, phi: np.ndarray, diagnostics: dict) -> EstimateResult:
    n = phi.shape[0]
    se = float(np.std(phi, ddof=1) / np.sqrt(n))
    return EstimateResult(
        estimator_id=name,
        point=float(point),
        se=se,
        ci_low=float(point - Z_CRIT * se),
        ci_high=float(point + Z_CRIT * se),
        diagnostics=diagnostics,
    )


def compute_eif(t, y, g1, m1, m0, point) -> np.ndarray:
    """Efficient influence function of the ATE at the given nuisances."""
    return (
        t / g1 * (y - m1)
        - (1.0 - t) / (1.0 - g1) * (y - m0)
        + m1 - m0 - point
    )


# ---------------------------------------------------------------------------
# outcome-regression estimator


def estimate_gcomp(dataset: Dataset, rng: np.random.Generator) -> EstimateResult:
    """Standardized per-arm logistic regression (main effects only)."""
    x = np.column_stack([np.ones(dataset.n), dataset.features()])
    t = dataset.t.astype(np.float64)
    y = dataset.y.astype(np.float64)
    n, p = x.shape

    preds = {}
    adjust = {}
    diagnostics = {}
    for arm in (1, 0):
        mask = t == arm
        if not mask.any():
            raise EstimatorError(f"no observations in arm {arm}")
        fit = fit_logistic_irls(x[mask], y[mask])
        m_hat = expit(x @ fit.coef)
        preds[arm] = m_hat
        diagnostics[f"converged_{arm}"] = fit.converged
        diagnostics[f"separated_{arm}"] = fit.separated
        # delta-method pieces: d(mean prediction)/d(coef) and the M-estimator
        # influence of the arm fit
        deriv = m_hat * (1.0 - m_hat)
        c_vec = x.T @ deriv / n
        info = x.T @ (x * (mask * deriv)[:, None]) / n
        score = x * (mask * (y - m_hat))[:, None]
        try:
            adjust[arm] = score @ np.linalg.solve(info, c_vec)
        except np.linalg.LinAlgError:
            adjust[arm] = score @ np.linalg.lstsq(info, c_vec, rcond=None)[0]

    point = float(np.mean(preds[1] - preds[0]))
    phi = (preds[1] - preds[0] - point) + adjust[1] - adjust[0]
    return _result("gcomp", point, phi, diagnostics)


# ---------------------------------------------------------------------------
# weighting estimator


def estimate_iptw_cbps(dataset: Dataset, rng: np.random.Generator) -> EstimateResult:
    """Hajek-weighted difference in means with balancing propensity scores."""
    z = np.column_stack([np.ones(dataset.n), dataset.features()])
    t = dataset.t.astype(np.float64)
    y = dataset.y.astype(np.float64)
    if t.min() == t.max():
        raise EstimatorError("single-arm sample")

    fit = fit_cbps(z, t)
    g1 = np.clip(fit.predict(z), *G_CLIP)
    w1 = t / g1
    w0 = (1.0 - t) / (1.0 - g1)
    mu1 = float(w1 @ y / w1.sum())
    mu0 = float(w0 @ y / w0.sum())
    point = mu1 - mu0
    # fixed-weight sandwich: ratio-estimator influence for each arm mean
    phi = w1 * (y - mu1) / w1.mean() - w0 * (y - mu0) / w0.mean()
    diagnostics = {
        "balanced": fit.balanced,
        "max_moment": fit.max_moment,
        "max_weight": float(np.maximum(w1, w0).max()),
    }
    return _result("iptw_cbps", point, phi, diagnostics)


# ---------------------------------------------------------------------------
# doubly robust estimators


def fit_nuisance_sl(
    dataset: Dataset,
    rng: np.random.Generator,
    *,
    n_folds: int | None = None,
) -> NuisanceFit:
    """Stacked nuisance fits: outcome regression first, then propensity."""
    x = dataset.features()
    t = dataset.t.astype(np.float64)
    y = dataset.y.astype(np.float64)
    n = dataset.n
    if n_folds is None:
        n_folds = default_n_folds(n)
    try:
        sl_out = fit_super_learner(
            np.column_stack([t, x]), y, strata=dataset.t, rng=rng, n_folds=n_folds
        )
        sl_g = fit_super_learner(x, t, strata=dataset.t, rng=rng, n_folds=n_folds)
    except SlError as exc:
        raise EstimatorError(str(exc)) from exc
    ones = np.ones((n, 1))
    m1 = sl_out.predict(np.hstack([ones, x]))
    m0 = sl_out.predict(np.hstack([np.zeros((n, 1)), x]))
    g1 = np.clip(sl_g.predict(x), *G_CLIP)
    weights = {
        "outcome": {k: float(v) for k, v in zip(sl_out.names, sl_out.weights)},
        "treatment": {k: float(v) for k, v in zip(sl_g.names, sl_g.weights)},
    }
    return NuisanceFit(m_hat=np.stack([m0, m1]), g_hat=g1, learner_weights=weights)


def estimate_aipw(
    dataset: Dataset,
    rng: np.random.Generator,
    *,
    nuisance: NuisanceFit | None = None,
) -> EstimateResult:
    """Augmented IPW (one-step efficient estimator)."""
    t = dataset.t.astype(np.float64)
    y = dataset.y.astype(np.float64)
    nuis = nuisance if nuisance is not None else fit_nuisance_sl(dataset, rng)
    g1 = np.clip(nuis.g_hat, *G_CLIP)
    m1, m0 = nuis.m_hat[1], nuis.m_hat[0]
    integrand = (
        m1 - m0
        + t / g1 * (y - m1)
        - (1.0 - t) / (1.0 - g1) * (y - m0)
    )
    point = float(integrand.mean())
    phi = integrand - point
    diagnostics = {"injected_nuisance": nuisance is not None}
    if nuis.learner_weights is not None:
        diagnostics["learner_weights"] = nuis.learner_weights
    return _result("aipw", point, phi, diagnostics)


def _fluctuate(t, y, g1, m1, m0):
    """Targeting step: two-parameter fluctuation, then one-parameter rescue.

    Returns updated arm surfaces with the empirical mean of the efficient
    influence function driven below :data:`EIF_TOL`, plus diagnostics.
    Acceptance is judged on that mean alone — a fluctuation fit that stopped
    early still counts if the score condition holds.
    """
    m1c = np.clip(m1, _M_CLIP, 1.0 - _M_CLIP)
    m0c = np.clip(m0, _M_CLIP, 1.0 - _M_CLIP)
    off1 = logit(m1c)
    off0 = logit(m0c)
    off_obs = np.where(t == 1.0, off1, off0)
    h1 = t / g1
    h0 = (1.0 - t) / (1.0 - g1)

    def _accept(m1s, m0s):
        point = float(np.mean(m1s - m0s))
        phi = compute_eif(t, y, g1, m1s, m0s, point)
        return point, phi, abs(float(phi.mean()))

    fit2 = fit_logistic_irls(np.column_stack([h1, h0]), y, offset=off_obs)
    eps1, eps0 = fit2.coef
    m1s = expit(off1 + eps1 / g1)
    m0s = expit(off0 + eps0 / (1.0 - g1))
    point, phi, mean_eif = _accept(m1s, m0s)
    if mean_eif <= EIF_TOL:
        diag = {"targeting": "two-parameter", "eps": [float(eps1), float(eps0)],
                "mean_eif": mean_eif}
        return point, phi, diag

    fit1 = fit_logistic_irls((h1 - h0)[:, None], y, offset=off_obs)
    eps = float(fit1.coef[0])
    m1s = expit(off1 + eps / g1)
    m0s = expit(off0 - eps / (1.0 - g1))
    point, phi, mean_eif = _accept(m1s, m0s)
    if mean_eif <= EIF_TOL:
        diag = {"targeting": "one-parameter", "eps": [eps], "mean_eif": mean_eif}
        return point, phi, diag
    raise EstimatorError(
        f"targeting failed: |mean EIF| = {mean_eif:.3e} after both fluctuations"
    )


def estimate_tmle(
    dataset: Dataset,
    rng: np.random.Generator,
    *,
    nuisance: NuisanceFit | None = None,
) -> EstimateResult:
    """Targeted maximum likelihood with logistic fluctuation."""
    t = dataset.t.astype(np.float64)
    y = dataset.y.astype(np.float64)
    nuis = nuisance if nuisance is not None else fit_nuisance_sl(dataset, rng)
    g1 = np.clip(nuis.g_hat, *G_CLIP)
    point, phi, diag = _fluctuate(t, y, g1, nuis.m_hat[1], nuis.m_hat[0])
    diag["injected_nuisance"] = nuisance is not None
    if nuis.learner_weights is not None:
        diag["learner_weights"] = nuis.learner_weights
    return _result("tmle", point, phi, diag)


def estimate_cvtmle(dataset: Dataset, rng: np.random.Generator) -> EstimateResult:
    """Cross-fitted TMLE: out-of-fold nuisances, pooled targeting."""
    x = dataset.features()
    t = dataset.t.astype(np.float64)
    y = dataset.y.astype(np.float64)
    n = dataset.n
    try:
        fold_id = stratified_folds(dataset.t, default_n_folds(n), rng)
        cf_out = fit_crossfit_super_learner(np.column_stack([t, x]), y, fold_id, rng)
        cf_g = fit_crossfit_super_learner(x, t, fold_id, rng)
    except SlError as exc:
        raise EstimatorError(str(exc)) from exc

    g1 = np.empty(n)
    m1 = np.empty(n)
    m0 = np.empty(n)
    n_folds = int(fold_id.max()) + 1
    for v in range(n_folds):
        rows = np.flatnonzero(fold_id == v)
        xv = x[rows]
        m1[rows] = cf_out.predict_fold(v, np.hstack([np.ones((rows.size, 1)), xv]))
        m0[rows] = cf_out.predict_fold(v, np.hstack([np.zeros((rows.size, 1)), xv]))
        g1[rows] = cf_g.predict_fold(v, xv)
    g1 = np.clip(g1, *G_CLIP)

    point, phi, diag = _fluctuate(t, y, g1, m1, m0)
    diag["n_folds"] = n_folds
    diag["learners"] = list(cf_out.names)
    return _result("cvtmle", point, phi, diag)


REGISTRY = {
    "gcomp": estimate_gcomp,
    "iptw_cbps": estimate_iptw_cbps,
    "aipw": estimate_aipw,
    "tmle": estimate_tmle,
    "cvtmle": estimate_cvtmle,
}

ESTIMATOR_IDS = tuple(REGISTRY)


def estimate(name: str, dataset: Dataset, rng: np.random.Generator, **kwargs) -> EstimateResult:
    try:
        fn = REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown estimator {name!r}; known: {sorted(REGISTRY)}") from None
    return fn(dataset, rng, **kwargs)
