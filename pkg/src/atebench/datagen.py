"""Simulation of observational datasets from a realized process.

Cell draws use a Vose alias table (O(1) per draw); treatment and outcome are
Bernoulli given the cell.  The uniform stream is consumed in fixed blocks —
alias column, alias coin, treatment, outcome — so a dataset is a pure
function of the process and the generator state.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:  # avoid a cycle: mechanisms -> estimators -> here
    from .mechanisms import Dgp


@dataclass(frozen=True)
class AliasTable:
    """Vose alias table for a discrete distribution."""

    prob: np.ndarray
    alias: np.ndarray

    @classmethod
    def from_probs(cls, probs: np.ndarray) -> "AliasTable":
        probs = np.asarray(probs, dtype=np.float64)
        k = probs.shape[0]
        scaled = probs * k
        prob = np.ones(k)
        alias = np.arange(k, dtype=np.int64)
        small = [i for i in range(k) if scaled[i] < 1.0]
        large = [i for i in range(k) if scaled[i] >= 1.0]
        while small and large:
            s = small.pop()
            l = large.pop()
            prob[s] = scaled[s]
            alias[s] = l
            scaled[l] -= 1.0 - scaled[s]
            if scaled[l] < 1.0:
                small.append(l)
            else:
                large.append(l)
        # leftovers are 1 up to rounding
        return cls(prob=prob, alias=alias)

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        k = self.prob.shape[0]
        col = (rng.random(size) * k).astype(np.int64)
        np.clip(col, 0, k - 1, out=col)
        coin = rng.random(size)
        return np.where(coin < self.prob[col], col, self.alias[col])


@dataclass
class Dataset:
    """One simulated sample: covariates, treatment, binary outcome."""

    x_bin: np.ndarray  # (n, u) int8
    x_num: np.ndarray  # (n, h) float64
    t: np.ndarray      # (n,) int8
    y: np.ndarray      # (n,) int8
    cell_index: np.ndarray  # (n,) int64

    @property
    def n(self) -> int:
        return self.t.shape[0]

    def features(self) -> np.ndarray:
        """Covariate matrix (binary columns first, then numeric)."""
        return np.hstack([self.x_bin.astype(np.float64), self.x_num])

    def to_csv(self, path) -> None:
        u = self.x_bin.shape[1]
        h = self.x_num.shape[1]
        header = [f"xb{j}" for j in range(u)] + [f"xn{j}" for j in range(h)] + ["t", "y"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i in range(self.n):
                row = [int(v) for v in self.x_bin[i]]
                row += [repr(float(v)) for v in self.x_num[i]]
                row += [int(self.t[i]), int(self.y[i])]
                writer.writerow(row)


def sample_dataset(dgp: "Dgp", n: int, rng: np.random.Generator) -> Dataset:
    """Draw ``n`` iid observations from the process."""
    if n < 1:
        raise ValueError("n must be positive")
    table = AliasTable.from_probs(dgp.pmf)
    idx = table.draw(rng, n)
    g = dgp.g_table[idx]
    t = (rng.random(n) < g).astype(np.int8)
    m = np.where(t == 1, dgp.m_table[1][idx], dgp.m_table[0][idx])
    y = (rng.random(n) < m).astype(np.int8)
    return Dataset(
        x_bin=dgp.support.x_bin[idx],
        x_num=dgp.support.x_num[idx],
        t=t,
        y=y,
        cell_index=idx,
    )
