"""Discrete covariate universe: support enumeration, interaction index, pmf prior.

A data-generating process lives on a finite support of ``2**u * c**h`` cells,
where ``u`` binary covariates are crossed with ``h`` numeric covariates that
each take values on the evenly spaced grid ``{0, 1/(c-1), ..., 1}``.  The
covariate distribution is a flat Dirichlet over that support.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

#: Refuse to enumerate supports larger than this (cells = 2**u * c**h).
MAX_SUPPORT_CELLS = 1_000_000


@dataclass(frozen=True)
class PriorConfig:
    """Hyperparameters pinning down one draw of a data-generating process.

    Parameters
    ----------
    u, h, c : int
        Number of binary covariates, number of numeric covariates, and grid
        resolution of each numeric covariate.
    k : int
        Maximum interaction order among the binary covariates.
    hte : bool
        Whether the outcome model carries covariate-dependent treatment
        effect terms.
    q : float
        Positivity bound: ``P(T=t) / P(T=t|x) <= q`` must hold at every cell.
    b : float
        Target confounding bias for the outcome mechanism.
    tol : float
        Half-width of the tolerance slab around ``b``.
    eta, rho : float
        Gaussian-process scale and inverse-length-scale hyperparameters used
        for the numeric-covariate effect functions.
    """

    u: int
    h: int
    c: int
    k: int
    hte: bool
    q: float
    b: float = 0.0
    tol: float = 0.01
    eta: float = 1.0
    rho: float = 1.0

    def __post_init__(self):
        if self.u < 1:
            raise ValueError("u must be >= 1")
        if self.h < 0:
            raise ValueError("h must be >= 0")
        if self.h >= 1 and self.c < 2:
            raise ValueError("c must be >= 2 when h >= 1")
        if not 0 <= self.k <= self.u:
            raise ValueError("k must satisfy 0 <= k <= u")
        if not self.q > 1.0:
            raise ValueError("positivity bound q must exceed 1")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if self.eta <= 0.0 or self.rho <= 0.0:
            raise ValueError("eta and rho must be positive")


@dataclass(frozen=True)
class SupportTable:
    """Enumerated covariate support.

    Cells are ordered with the binary coordinates varying fastest; both the
    binary block and the numeric block are in lexicographic order (first
    coordinate most significant).  ``num_index[i]`` maps cell ``i`` to its row
    in ``grid``, the deduplicated numeric lattice of shape ``(c**h, h)``.
    """

    u: int
    h: int
    c: int
    x_bin: np.ndarray = field(repr=False)  # (n_cells, u) int8
    x_num: np.ndarray = field(repr=False)  # (n_cells, h) float64
    grid: np.ndarray = field(repr=False)  # (c**h, h) float64
    num_index: np.ndarray = field(repr=False)  # (n_cells,) int64

    @property
    def n_cells(self) -> int:
        return self.x_bin.shape[0]

    def features(self) -> np.ndarray:
        """Per-cell feature matrix ``[x_bin | x_num]`` as float64."""
        return np.hstack([self.x_bin.astype(np.float64), self.x_num])


@dataclass(frozen=True)
class InteractionSet:
    """Binary interaction index: all ``l`` in ``{0,1}**u`` with ``sum(l) <= k``.

    Vectors are ordered by interaction order, then by the lexicographic order
    of the index combinations, so the intercept ``(0,...,0)`` comes first and
    the main effects follow in coordinate order.
    """

    u: int
    k: int
    vectors: np.ndarray = field(repr=False)  # (n_terms, u) int8

    @property
    def n_terms(self) -> int:
        return self.vectors.shape[0]

    def cell_products(self, x_bin: np.ndarray) -> np.ndarray:
        """Evaluate the interaction products ``prod_j x_bin[j]**l[j]``.

        Parameters
        ----------
        x_bin : (n, u) array of 0/1 values.

        Returns
        -------
        (n, n_terms) float64 array; the column for ``l = 0`` is all ones.
        """
        x = np.asarray(x_bin, dtype=np.float64)
        out = np.ones((x.shape[0], self.n_terms))
        for col, l in enumerate(self.vectors):
            idx = np.flatnonzero(l)
            if idx.size:
                out[:, col] = x[:, idx].prod(axis=1)
        return out


@dataclass(frozen=True)
class CovariatePmf:
    """A probability vector over the support cells."""

    probs: np.ndarray = field(repr=False)  # (n_cells,) float64

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probs must be a non-empty 1-d array")
        if np.any(p < 0.0) or not np.isfinite(p).all():
            raise ValueError("probs must be finite and non-negative")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("probs must sum to 1")
        object.__setattr__(self, "probs", p)

    @property
    def n_cells(self) -> int:
        return self.probs.shape[0]


def enumerate_support(u: int, h: int, c: int, *, max_cells: int = MAX_SUPPORT_CELLS) -> SupportTable:
    """Enumerate the full covariate support as a :class:`SupportTable`.

    Parameters
    ----------
    u : int
        Number of binary covariates (>= 1).
    h : int
        Number of numeric covariates (>= 0).
    c : int
        Grid size for each numeric covariate; the grid is
        ``{0, 1/(c-1), ..., 1}``.  Ignored when ``h == 0``.
    max_cells : int
        Guard against accidentally materializing an astronomically large
        support.

    Returns
    -------
    SupportTable
        Cells ordered with binary coordinates varying fastest, each block
        lexicographic.
    """
    if u < 1:
        raise ValueError("u must be >= 1")
    if h < 0:
        raise ValueError("h must be >= 0")
    if h >= 1 and c < 2:
        raise ValueError("c must be >= 2 when h >= 1")
    n_bin = 2**u
    n_num = c**h if h >= 1 else 1
    n_cells = n_bin * n_num
    if n_cells > max_cells:
        raise ValueError(f"support has {n_cells} cells, exceeding the maximum {max_cells}")

    bin_rank = np.arange(n_bin, dtype=np.int64)
    x_bin_block = np.zeros((n_bin, u), dtype=np.int8)
    for j in range(u):
        x_bin_block[:, j] = (bin_rank >> (u - 1 - j)) & 1

    if h >= 1:
        grid_vals = np.arange(c, dtype=np.float64) / (c - 1)
        num_rank = np.arange(n_num, dtype=np.int64)
        grid = np.zeros((n_num, h), dtype=np.float64)
        for j in range(h):
            grid[:, j] = grid_vals[(num_rank // c ** (h - 1 - j)) % c]
    else:
        grid = np.zeros((1, 0), dtype=np.float64)

    x_bin = np.tile(x_bin_block, (n_num, 1))
    num_index = np.repeat(np.arange(n_num, dtype=np.int64), n_bin)
    x_num = grid[num_index]
    return SupportTable(u=u, h=h, c=c, x_bin=x_bin, x_num=x_num, grid=grid, num_index=num_index)


def build_interaction_index(u: int, k: int) -> InteractionSet:
    """Build the interaction set ``L`` of binary exponent vectors.

    Contains every ``l`` in ``{0,1}**u`` with ``sum(l) <= k``; the count is
    ``sum_{j=0..k} C(u, j)``.
    """
    if u < 1:
        raise ValueError("u must be >= 1")
    if not 0 <= k <= u:
        raise ValueError("k must satisfy 0 <= k <= u")
    rows = []
    for order in range(k + 1):
        for combo in itertools.combinations(range(u), order):
            vec = np.zeros(u, dtype=np.int8)
            vec[list(combo)] = 1
            rows.append(vec)
    return InteractionSet(u=u, k=k, vectors=np.array(rows, dtype=np.int8))


def sample_covariate_pmf(support: SupportTable | int, rng: np.random.Generator) -> CovariatePmf:
    """Draw a pmf over the support from a flat Dirichlet.

    Implemented by normalizing independent unit-rate exponential draws, one
    per cell, which is the classical gamma representation of a
    Dirichlet(1,...,1) sample.

    Parameters
    ----------
    support : SupportTable or int
        The support (or just its cell count).
    rng : numpy.random.Generator
    """
    n_cells = support if isinstance(support, int) else support.n_cells
    draws = rng.standard_exponential(n_cells)
    return CovariatePmf(probs=draws / draws.sum())
