"""Convex polytopes in halfspace form and uniform sampling over them.

A polytope is the solution set of ``a @ x <= b``.  We find a strictly
interior starting point via the Chebyshev center (largest inscribed ball,
solved as an LP) and draw approximately uniform points with a hit-and-run
random walk whose inner loop lives in the compiled/numpy kernel backend.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from ._kernels import (
    CHAIN_UNBOUNDED,
    colwise_matvec,
    run_chain,
)

#: Chebyshev radii at or below this are treated as an empty interior.
RADIUS_TOL = 1e-9

#: Constraint slack tolerance used by membership checks.
MEMBERSHIP_SLACK = 1e-10

#: RNG draws are pregenerated in blocks of this many steps.  Fixed so that
#: the random stream consumed by a walk depends only on the seed, never on
#: chunking choices.
CHUNK = 16384


class PolytopeError(Exception):
    """Base class for polytope failures."""


class EmptyPolytopeError(PolytopeError):
    """The constraint system has no strictly interior point."""


class UnboundedPolytopeError(PolytopeError):
    """The constraint system admits a recession direction."""


@dataclass(frozen=True)
class Polytope:
    """Halfspace system ``a @ x <= b``."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        a = np.ascontiguousarray(np.asarray(self.a, dtype=np.float64))
        b = np.ascontiguousarray(np.asarray(self.b, dtype=np.float64))
        if a.ndim != 2:
            raise ValueError("constraint matrix must be 2-d")
        if b.shape != (a.shape[0],):
            raise ValueError("bound vector length must match the row count")
        if not (np.isfinite(a).all() and np.isfinite(b).all()):
            raise ValueError("constraints must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n_rows(self) -> int:
        return self.a.shape[0]

    @property
    def dim(self) -> int:
        return self.a.shape[1]

    def slacks(self, x: np.ndarray) -> np.ndarray:
        return self.b - self.a @ np.asarray(x, dtype=np.float64)

    def contains(self, x: np.ndarray, slack: float = MEMBERSHIP_SLACK) -> bool:
        """Whether ``x`` satisfies every constraint up to ``slack``."""
        return bool(self.slacks(x).min() >= -slack)


def _normalized_rows(poly: Polytope) -> tuple[np.ndarray, np.ndarray]:
    """Unit-normalize rows; zero rows are dropped (or flag infeasibility)."""
    norms = np.sqrt((poly.a * poly.a).sum(axis=1))
    zero = norms == 0.0
    if zero.any():
        if (poly.b[zero] < 0.0).any():
            raise EmptyPolytopeError("zero row with negative bound")
        keep = ~zero
        return poly.a[keep] / norms[keep, None], poly.b[keep] / norms[keep]
    return poly.a / norms[:, None], poly.b / norms


def chebyshev_center(poly: Polytope) -> tuple[np.ndarray, float]:
    """Center and radius of the largest ball inscribed in the polytope.

    Solves ``max r`` subject to ``a_i @ x + ||a_i|| r <= b_i`` with HiGHS.
    Raises :class:`EmptyPolytopeError` when the system is infeasible or the
    radius is at most :data:`RADIUS_TOL`, and :class:`UnboundedPolytopeError`
    when the inscribed ball can grow without limit.
    """
    a_n, b_n = _normalized_rows(poly)
    m, d = a_n.shape
    c = np.zeros(d + 1)
    c[-1] = -1.0
    a_ub = np.hstack([a_n, np.ones((m, 1))])
    res = linprog(
        c,
        A_ub=a_ub,
        b_ub=b_n,
        bounds=[(None, None)] * d + [(0.0, None)],
        method="highs",
    )
    if res.status == 2:
        raise EmptyPolytopeError("infeasible constraint system")
    if res.status == 3:
        raise UnboundedPolytopeError("inscribed ball radius is unbounded")
    if not res.success:
        raise PolytopeError(f"chebyshev LP failed: {res.message}")
    radius = float(res.x[-1])
    if radius <= RADIUS_TOL:
        raise EmptyPolytopeError(f"interior is empty (radius {radius:.3e})")
    return res.x[:-1].copy(), radius


def hit_and_run_sample(
    poly: Polytope,
    n_samples: int,
    rng: np.random.Generator,
    *,
    burn_in: int | None = None,
    thin: int | None = None,
    axis_prob: float = 0.2,
    refresh_every: int = 512,
    start: np.ndarray | None = None,
    stats: dict | None = None,
) -> np.ndarray:
    """Draw ``n_samples`` approximately uniform points from the polytope.

    The walk starts at ``start`` (Chebyshev center by default), mixes
    gaussian-direction chords with single-axis chords (probability
    ``axis_prob``), and records every ``thin``-th point after ``burn_in``
    steps.  Chord endpoints are tracked incrementally through constraint
    slacks, which are recomputed from scratch every ``refresh_every`` steps;
    a chord that underflows restarts the walker from ``start``.

    ``stats``, if given, receives ``n_resets`` and ``n_steps``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    a_n, b_n = _normalized_rows(poly)
    m, d = a_n.shape
    if burn_in is None:
        burn_in = max(1000, 100 * d)
    if thin is None:
        thin = 10 * d
    if thin < 1 or burn_in < 0:
        raise ValueError("burn_in must be >= 0 and thin >= 1")

    if start is None:
        start_pt, _ = chebyshev_center(poly)
    else:
        start_pt = np.array(start, dtype=np.float64)
        if start_pt.shape != (d,):
            raise ValueError("start point has the wrong dimension")
    start_slack = np.empty(m)
    colwise_matvec(a_n, start_pt, start_slack)
    np.subtract(b_n, start_slack, out=start_slack)
    if start_slack.min() <= 0.0:
        raise PolytopeError("start point is not strictly interior")

    a_f = np.asfortranarray(a_n)
    v = start_pt.copy()
    slack = start_slack.copy()
    out = np.empty((n_samples, d))

    total_steps = burn_in + thin * n_samples
    keep_all = burn_in + thin * (1 + np.arange(n_samples, dtype=np.int64)) - 1
    n_resets = 0
    kept = 0
    step0 = 0
    while step0 < total_steps:
        n_steps = min(CHUNK, total_steps - step0)
        normals = rng.standard_normal((n_steps, d))
        u_mix = rng.random(n_steps)
        u_axis = rng.random(n_steps)
        u_step = rng.random(n_steps)
        in_chunk = keep_all[(keep_all >= step0) & (keep_all < step0 + n_steps)]
        keep_local = np.ascontiguousarray(in_chunk - step0, dtype=np.int64)
        status, resets, _ = run_chain(
            a_f,
            b_n,
            v,
            slack,
            start_pt,
            start_slack,
            normals,
            u_mix,
            u_axis,
            u_step,
            axis_prob,
            step0,
            refresh_every,
            keep_local,
            out,
            kept,
        )
        n_resets += int(resets)
        if status == CHAIN_UNBOUNDED:
            raise UnboundedPolytopeError("encountered an unbounded chord")
        kept += keep_local.shape[0]
        step0 += n_steps

    if stats is not None:
        stats["n_resets"] = n_resets
        stats["n_steps"] = total_steps
    return out
