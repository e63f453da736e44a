"""Stacked binary regression over a small fixed library.

Library: main-effects logistic, logistic with all pairwise products,
gradient-boosted trees, and a saturated dummy basis over the binary
columns (skipped when the training set is too small to identify it).
Out-of-fold predictions feed an exponentiated gradient solver that picks
convex weights minimizing the Bernoulli log-loss.  A learner that raises
during any fit is dropped from the stack (weights renormalize over the
survivors); losing every learner is an error.

The random stream is consumed in a fixed order — fold assignment first, then
learner fits fold by fold in library order, then (for the plain variant)
full-data fits in library order — so fits reproduce exactly from a seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .boost import GradientBoostedTrees
from .glm import fit_logistic_irls

_P_CLIP = 1e-9

_EG_MAX_ITER = 500
_EG_TOL = 1e-10


class SlError(RuntimeError):
    """The stack could not be fitted (e.g. every learner failed)."""


def default_n_folds(n: int) -> int:
    return 10 if n >= 500 else 5


def stratified_folds(strata: np.ndarray, n_folds: int, rng: np.random.Generator) -> np.ndarray:
    """Fold assignment (0..n_folds-1 per row) balanced within each stratum.

    The effective fold count is capped by the smallest stratum so every fold
    sees every stratum; fewer than two usable folds is an error.
    """
    strata = np.asarray(strata)
    n = strata.shape[0]
    values, counts = np.unique(strata, return_counts=True)
    v_eff = min(n_folds, int(counts.min()))
    if v_eff < 2:
        raise SlError(
            f"smallest stratum has {int(counts.min())} rows; cannot form folds"
        )
    fold_id = np.empty(n, dtype=np.int64)
    for val in values:
        members = np.flatnonzero(strata == val)
        perm = members[rng.permutation(members.shape[0])]
        for v, chunk in enumerate(np.array_split(perm, v_eff)):
            fold_id[chunk] = v
    return fold_id


def pairwise_expand(z: np.ndarray) -> np.ndarray:
    """Columns of ``z`` plus all pairwise products ``z_i * z_j`` (i < j)."""
    n, p = z.shape
    cols = [z]
    for i in range(p):
        for j in range(i + 1, p):
            cols.append((z[:, i] * z[:, j])[:, None])
    return np.hstack(cols)


class _LogitModel:
    def __init__(self, coef: np.ndarray, pairwise: bool):
        self.coef = coef
        self.pairwise = pairwise

    def predict(self, z: np.ndarray) -> np.ndarray:
        zz = pairwise_expand(z) if self.pairwise else z
        x = np.column_stack([np.ones(zz.shape[0]), zz])
        return expit(x @ self.coef)


def _fit_logit(z, y, rng, pairwise: bool) -> _LogitModel:
    zz = pairwise_expand(z) if pairwise else z
    x = np.column_stack([np.ones(zz.shape[0]), zz])
    fit = fit_logistic_irls(x, y)
    return _LogitModel(fit.coef, pairwise)


class _GbtModel:
    def __init__(self, model: GradientBoostedTrees):
        self.model = model

    def predict(self, z: np.ndarray) -> np.ndarray:
        return self.model.predict_proba(z)


def _fit_gbt(z, y, rng) -> _GbtModel:
    return _GbtModel(GradientBoostedTrees().fit(z, y, rng))


#: training rows required per free parameter before the cells learner runs
#: (the usual ten-events-per-variable rule of thumb for logistic fits)
_CELLS_ROWS_PER_PARAM = 10


class _CellsModel:
    """Logistic fit on one dummy per observed binary-column pattern.

    Strict interactions among the binary columns (treatment included when it
    is part of ``z``) are what the other library members miss; this learner
    saturates them and keeps any remaining columns as linear terms.  Rows
    whose pattern never appeared in training fall back to the reference
    (all-zero dummy) profile.
    """

    def __init__(self, bin_cols, num_cols, code_to_dummy, coef):
        self.bin_cols = bin_cols
        self.num_cols = num_cols
        self.code_to_dummy = code_to_dummy
        self.coef = coef

    def _design(self, z: np.ndarray) -> np.ndarray:
        n = z.shape[0]
        codes = (z[:, self.bin_cols] @ (2 ** np.arange(len(self.bin_cols)))).astype(np.int64)
        dummies = np.zeros((n, len(self.code_to_dummy)))
        for row, code in enumerate(codes):
            col = self.code_to_dummy.get(int(code), -1)
            if col >= 0:
                dummies[row, col] = 1.0
        return np.column_stack([np.ones(n), dummies[:, 1:], z[:, self.num_cols]])

    def predict(self, z: np.ndarray) -> np.ndarray:
        return expit(self._design(np.asarray(z, dtype=np.float64)) @ self.coef)


def _fit_cells(z, y, rng) -> _CellsModel:
    z = np.asarray(z, dtype=np.float64)
    n, p = z.shape
    bin_cols = [j for j in range(p) if np.isin(z[:, j], (0.0, 1.0)).all()]
    num_cols = [j for j in range(p) if j not in bin_cols]
    if not bin_cols:
        raise SlError("no binary columns to saturate")
    codes = (z[:, bin_cols] @ (2 ** np.arange(len(bin_cols)))).astype(np.int64)
    uniq = np.unique(codes)
    n_params = uniq.shape[0] + len(num_cols)
    if uniq.shape[0] < 2 or n < _CELLS_ROWS_PER_PARAM * n_params:
        raise SlError("too few rows to saturate the binary cells")
    model = _CellsModel(
        bin_cols=bin_cols,
        num_cols=num_cols,
        code_to_dummy={int(c): i for i, c in enumerate(uniq)},
        coef=None,
    )
    fit = fit_logistic_irls(model._design(z), y)
    model.coef = fit.coef
    return model


LIBRARY = (
    ("logit_main", lambda z, y, rng: _fit_logit(z, y, rng, pairwise=False)),
    ("logit_pair", lambda z, y, rng: _fit_logit(z, y, rng, pairwise=True)),
    ("gbt", _fit_gbt),
    ("cells", _fit_cells),
)


def _log_loss(p: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(p, _P_CLIP, 1.0 - _P_CLIP)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def fit_weights_eg(preds: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Convex stacking weights by exponentiated gradient with backtracking."""
    n, m = preds.shape
    if m == 1:
        return np.ones(1)
    w = np.full(m, 1.0 / m)
    cur = _log_loss(preds @ w, y)
    lr = 1.0
    for _ in range(_EG_MAX_ITER):
        p = np.clip(preds @ w, _P_CLIP, 1.0 - _P_CLIP)
        grad_p = -(y / p - (1.0 - y) / (1.0 - p)) / n
        grad_w = preds.T @ grad_p
        accepted = False
        step = lr
        for _ in range(40):
            arg = -step * grad_w
            arg -= arg.max()
            w_new = w * np.exp(arg)
            w_new /= w_new.sum()
            new = _log_loss(preds @ w_new, y)
            if new < cur:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        improved_by = cur - new
        w, cur = w_new, new
        lr = min(step * 2.0, 1e4)
        if improved_by < _EG_TOL:
            break
    return w


def _fit_library(z, y, rows, rng, skip: set) -> list:
    """Fit every non-skipped learner on the given rows; None marks a failure."""
    models = []
    for name, fit_fn in LIBRARY:
        if name in skip:
            models.append(None)
            continue
        try:
            models.append(fit_fn(z[rows], y[rows], rng))
        except Exception:
            models.append(None)
    return models


@dataclass
class SLFit:
    """Plain stack: cross-validated weights, full-data learner fits."""

    names: list
    models: list
    weights: np.ndarray

    def predict(self, z: np.ndarray) -> np.ndarray:
        acc = np.zeros(z.shape[0])
        for w, model in zip(self.weights, self.models):
            acc += w * model.predict(z)
        return acc


@dataclass
class CrossfitSL:
    """Per-fold stack for cross-fitted estimation.

    ``models[v]`` were fit with fold ``v`` held out and ``weights[v]`` were
    chosen on out-of-fold predictions of the remaining rows, so fold ``v``
    predictions are independent of fold ``v`` data.
    """

    names: list
    fold_id: np.ndarray
    models: list          # models[v][l]
    oof: np.ndarray       # (n, n_learners) out-of-fold learner predictions
    weights: np.ndarray   # (n_folds, n_learners)

    def predict_fold(self, v: int, z: np.ndarray) -> np.ndarray:
        acc = np.zeros(z.shape[0])
        for w, model in zip(self.weights[v], self.models[v]):
            acc += w * model.predict(z)
        return acc

    def oof_meta(self) -> np.ndarray:
        out = np.empty(self.oof.shape[0])
        for v in range(self.weights.shape[0]):
            rows = self.fold_id == v
            out[rows] = self.oof[rows] @ self.weights[v]
        return out


def _crossfit_parts(z, y, fold_id, rng):
    """Shared machinery: per-fold fits, survivor set, OOF predictions."""
    n = z.shape[0]
    n_folds = int(fold_id.max()) + 1
    all_models = []
    skip: set = set()
    oof_full = np.full((n, len(LIBRARY)), np.nan)
    for v in range(n_folds):
        train = np.flatnonzero(fold_id != v)
        test = np.flatnonzero(fold_id == v)
        models = _fit_library(z, y, train, rng, skip)
        for l, model in enumerate(models):
            if model is None:
                if LIBRARY[l][0] not in skip:
                    skip.add(LIBRARY[l][0])
            else:
                try:
                    oof_full[test, l] = model.predict(z[test])
                except Exception:
                    skip.add(LIBRARY[l][0])
        all_models.append(models)
    keep = [l for l, (name, _) in enumerate(LIBRARY) if name not in skip]
    if not keep:
        raise SlError("every learner in the stack failed")
    names = [LIBRARY[l][0] for l in keep]
    oof = oof_full[:, keep]
    models = [[fold_models[l] for l in keep] for fold_models in all_models]
    if any(m is None for fold_models in models for m in fold_models):
        # a survivor must have succeeded in every fold
        raise SlError("inconsistent learner failures across folds")
    return names, keep, models, oof


def fit_super_learner(
    z: np.ndarray,
    y: np.ndarray,
    strata: np.ndarray,
    rng: np.random.Generator,
    *,
    n_folds: int | None = None,
) -> SLFit:
    """Cross-validate stacking weights, then refit learners on all rows."""
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if n_folds is None:
        n_folds = default_n_folds(z.shape[0])
    fold_id = stratified_folds(strata, n_folds, rng)
    names, keep, _, oof = _crossfit_parts(z, y, fold_id, rng)
    weights = fit_weights_eg(oof, y)
    full = _fit_library(z, y, np.arange(z.shape[0]), rng, {n for n, _ in LIBRARY if n not in names})
    full_kept = [full[l] for l in keep]
    if any(m is None for m in full_kept):
        raise SlError("a learner failed on the full data after passing cross-validation")
    return SLFit(names=names, models=full_kept, weights=weights)


def fit_crossfit_super_learner(
    z: np.ndarray,
    y: np.ndarray,
    fold_id: np.ndarray,
    rng: np.random.Generator,
) -> CrossfitSL:
    """Per-fold stacks sharing one fold assignment (for cross-fitted TMLE)."""
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    names, _, models, oof = _crossfit_parts(z, y, fold_id, rng)
    n_folds = int(fold_id.max()) + 1
    weights = np.empty((n_folds, len(names)))
    for v in range(n_folds):
        rows = fold_id != v
        weights[v] = fit_weights_eg(oof[rows], y[rows])
    return CrossfitSL(names=names, fold_id=fold_id, models=models, oof=oof, weights=weights)
