"""Gradient-boosted trees for binary outcomes on pre-binned features.

Shallow trees, logistic loss, and an internal holdout for early stopping.
Tree growth runs in the kernel backend (compiled when available) with fixed
accumulation orders, so fits are reproducible bit-for-bit across backends.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .._kernels import build_tree

MAX_BINS = 256

_PROB_CLIP = 1e-6


@dataclass
class _Binner:
    cuts: list  # per-feature ascending cut points; code = #cuts <= value

    @classmethod
    def fit(cls, x: np.ndarray, max_bins: int = MAX_BINS) -> "_Binner":
        cuts = []
        for j in range(x.shape[1]):
            vals = np.unique(x[:, j])
            if vals.shape[0] <= max_bins:
                cj = (vals[1:] + vals[:-1]) / 2.0
            else:
                qs = np.quantile(x[:, j], np.linspace(0.0, 1.0, max_bins + 1)[1:-1])
                cj = np.unique(qs)
            cuts.append(cj)
        return cls(cuts=cuts)

    def transform(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n, p = x.shape
        codes = np.empty((n, p), dtype=np.uint8)
        n_bins = np.empty(p, dtype=np.int64)
        for j in range(p):
            codes[:, j] = np.searchsorted(self.cuts[j], x[:, j], side="right")
            n_bins[j] = self.cuts[j].shape[0] + 1
        return np.ascontiguousarray(codes), n_bins


def _predict_trees(trees, codes: np.ndarray, max_depth: int) -> np.ndarray:
    """Sum of leaf values over trees for each row of ``codes``."""
    n = codes.shape[0]
    out = np.zeros(n)
    row_ix = np.arange(n)
    for feat, thr, left, right, value in trees:
        node = np.zeros(n, dtype=np.int64)
        for _ in range(max_depth):
            f = feat[node]
            interior = f >= 0
            if not interior.any():
                break
            f_safe = np.where(interior, f, 0)
            go_left = codes[row_ix, f_safe] <= thr[node]
            node = np.where(interior, np.where(go_left, left[node], right[node]), node)
        out += value[node]
    return out


def _holdout_loss(eta: np.ndarray, y: np.ndarray) -> float:
    # mean negative Bernoulli log-likelihood, computed stably
    return float(np.mean(np.logaddexp(0.0, eta) - y * eta))


@dataclass
class GradientBoostedTrees:
    """Binary-outcome boosting with holdout-based early stopping.

    A random 20% holdout tracks out-of-sample loss; training stops once the
    holdout has not improved for ``patience`` rounds and the model keeps the
    prefix of trees through the best round (possibly none).
    """

    n_trees: int = 200
    learning_rate: float = 0.1
    max_depth: int = 4
    lam: float = 1.0
    min_child_hess: float = 1e-3
    min_leaf: int = 5
    min_gain: float = 0.0
    holdout_frac: float = 0.2
    patience: int = 10

    _binner: _Binner | None = field(default=None, repr=False)
    _trees: list = field(default_factory=list, repr=False)
    _base: float = 0.0

    def fit(self, x: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> "GradientBoostedTrees":
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n = x.shape[0]
        self._binner = _Binner.fit(x)
        codes, n_bins = self._binner.transform(x)

        n_hold = int(self.holdout_frac * n)
        perm = rng.permutation(n)
        hold_ix, train_ix = perm[:n_hold], perm[n_hold:]
        codes_tr = np.ascontiguousarray(codes[train_ix])
        codes_ho = np.ascontiguousarray(codes[hold_ix])
        y_tr, y_ho = y[train_ix], y[hold_ix]
        n_tr = y_tr.shape[0]

        p_bar = float(np.clip(y_tr.mean(), _PROB_CLIP, 1.0 - _PROB_CLIP))
        self._base = float(np.log(p_bar / (1.0 - p_bar)))
        eta_tr = np.full(n_tr, self._base)
        eta_ho = np.full(n_hold, self._base)

        rows = np.arange(n_tr, dtype=np.int64)
        self._trees = []
        best_loss = _holdout_loss(eta_ho, y_ho) if n_hold else np.inf
        best_round = 0  # number of trees in the best prefix
        for round_ix in range(1, self.n_trees + 1):
            p_tr = expit(eta_tr)
            grad = p_tr - y_tr
            hess = p_tr * (1.0 - p_tr)
            feat, thr, left, right, value, _ = build_tree(
                codes_tr, grad, hess, rows, n_bins,
                self.max_depth, self.lam, self.min_child_hess,
                self.min_leaf, self.min_gain,
            )
            tree = (feat, thr, left, right, value)
            self._trees.append(tree)
            eta_tr += self.learning_rate * _predict_trees([tree], codes_tr, self.max_depth)
            if n_hold:
                eta_ho += self.learning_rate * _predict_trees([tree], codes_ho, self.max_depth)
                loss = _holdout_loss(eta_ho, y_ho)
                if loss < best_loss:
                    best_loss = loss
                    best_round = round_ix
                elif round_ix - best_round >= self.patience:
                    break
            else:
                best_round = round_ix
        self._trees = self._trees[:best_round]
        return self

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        if self._binner is None:
            raise RuntimeError("model is not fitted")
        codes, _ = self._binner.transform(np.asarray(x, dtype=np.float64))
        eta = np.full(codes.shape[0], self._base)
        if self._trees:
            eta += self.learning_rate * _predict_trees(self._trees, codes, self.max_depth)
        return expit(eta)
