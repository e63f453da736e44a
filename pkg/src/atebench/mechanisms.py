"""Sampling of complete discrete causal data-generating processes.

A process over the finite support consists of a covariate distribution, a
treatment-assignment probability per cell (``g_table``), and a Bernoulli
outcome mean per (treatment, cell) (``m_table``).  Both mechanisms are linear
in interaction features whose coefficients come with Gaussian-process-
modulated companions on the numeric grid, and are drawn uniformly from the
polytope of coefficient vectors that keep probabilities valid, keep overlap
bounded (treatment), and pin the confounding bias of the naive contrast near
a target value (outcome).  Covariate distributions that cannot support the
bias target are rejected and redrawn, up to a hard attempt cap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import expit

from .estimators.glm import fit_logistic_irls
from .gp import GpSampler
from .polytope import EmptyPolytopeError, Polytope, hit_and_run_sample
from .universe import (
    InteractionSet,
    PriorConfig,
    SupportTable,
    build_interaction_index,
    enumerate_support,
    sample_covariate_pmf,
)

#: Hard cap on covariate-distribution redraws before giving up on a
#: configuration.
MAX_DGP_ATTEMPTS = 1000

#: Cells with less covariate mass than this are ignored by the positivity
#: index (avoids 0/0 on numerically empty cells).
POSITIVITY_MIN_MASS = 1e-12


class FeasibilityExhausted(RuntimeError):
    """No feasible mechanism pair was found within the attempt budget."""

    def __init__(self, attempts: int):
        self.attempts = attempts
        super().__init__(
            f"no feasible process found in {attempts} attempts; the bias "
            "target is likely unreachable for this configuration"
        )


@dataclass(frozen=True)
class TreatmentMechanism:
    """Realized propensity surface and the coefficients that produced it."""

    alpha: np.ndarray
    g_table: np.ndarray
    p_treat: float
    functions: np.ndarray | None = None  # (n_terms, n_grid) f_l values
    design: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class OutcomeMechanism:
    """Realized outcome means, effect block first in the coefficient vector.

    With heterogeneous effects ``lambda_coeffs`` holds the per-interaction
    effect coefficients; without, it is the single constant shift, so the
    average effect *is* ``lambda_coeffs[0]``.
    """

    lambda_coeffs: np.ndarray
    beta_coeffs: np.ndarray
    m_table: np.ndarray  # (2, n_cells); m_table[t] is the arm-t surface
    hte: bool
    functions_h: np.ndarray | None = None  # effect-block grid functions
    functions_w: np.ndarray | None = None  # baseline-block grid functions
    design: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class DgpTruth:
    """Exact functionals of one process, all finite sums over the support."""

    ate: float
    confounding_bias: float
    positivity_index: float
    ey1: float
    ey0: float


@dataclass
class DgpProvenance:
    """How a process came to be: attempt count plus caller-stamped seeds."""

    iterations: int = 1
    seeds: dict = field(default_factory=dict)


@dataclass
class Dgp:
    """A fully realized data-generating process."""

    config: PriorConfig
    support: SupportTable
    pmf: np.ndarray
    treatment: TreatmentMechanism
    outcome: OutcomeMechanism
    truth: DgpTruth
    provenance: DgpProvenance = field(default_factory=DgpProvenance)

    @property
    def g_table(self) -> np.ndarray:
        return self.treatment.g_table

    @property
    def m_table(self) -> np.ndarray:
        return self.outcome.m_table

    def features(self) -> np.ndarray:
        return self.support.features()


def treatment_design(
    support: SupportTable,
    interactions: InteractionSet,
    f_values: np.ndarray | None = None,
) -> np.ndarray:
    """Per-cell design for the propensity surface.

    Columns interleave each interaction term with its function-modulated
    companion ``f_l(x_num) * term``; with no numeric covariates the
    companions are dropped.
    """
    base = interactions.cell_products(support.x_bin)
    if support.h == 0:
        return base
    if f_values is None:
        raise ValueError("numeric covariates require one grid function per term")
    fv = f_values[:, support.num_index].T  # (n_cells, n_terms)
    n, m = base.shape
    design = np.empty((n, 2 * m))
    design[:, 0::2] = base
    design[:, 1::2] = base * fv
    return design


def outcome_design(
    support: SupportTable,
    interactions: InteractionSet,
    h_values: np.ndarray | None,
    w_values: np.ndarray | None,
    hte: bool,
) -> np.ndarray:
    """Stacked design for the outcome-mean surface, control rows first.

    With heterogeneous effects the coefficient vector is (effect block,
    baseline block); without, it is (scalar effect, baseline block), making
    the average effect a single coefficient.
    """
    base = interactions.cell_products(support.x_bin)
    n, m = base.shape

    def _block(values: np.ndarray | None) -> np.ndarray:
        if support.h == 0:
            return base
        block = np.empty((n, 2 * m))
        block[:, 0::2] = base
        block[:, 1::2] = base * values[:, support.num_index].T
        return block

    base_block = _block(w_values)
    if hte:
        eff_block = _block(h_values)
        zeros = np.zeros_like(eff_block)
        row_t0 = np.hstack([zeros, base_block])
        row_t1 = np.hstack([eff_block, base_block])
    else:
        t_col0 = np.zeros((n, 1))
        t_col1 = np.ones((n, 1))
        row_t0 = np.hstack([t_col0, base_block])
        row_t1 = np.hstack([t_col1, base_block])
    return np.vstack([row_t0, row_t1])


def effect_block_width(support: SupportTable, interactions: InteractionSet, hte: bool) -> int:
    """Number of leading outcome coefficients that form the effect block."""
    if not hte:
        return 1
    return interactions.n_terms if support.h == 0 else 2 * interactions.n_terms


def build_treatment_polytope(design: np.ndarray, pmf: np.ndarray, q: float) -> Polytope:
    """Coefficient polytope for a valid, overlap-bounded propensity surface.

    Rows enforce, per cell, ``g <= 1``, ``g >= 0``, ``g >= p_bar / q`` and
    ``g <= 1 - (1 - p_bar) / q`` where ``p_bar`` is the marginal treatment
    probability — so ``q`` caps how extreme assignment may get relative to
    the marginal rate, in both arms.
    """
    n = design.shape[0]
    p_row = pmf @ design
    a = np.vstack([
        design,
        -design,
        p_row[None, :] - q * design,
        q * design - p_row[None, :],
    ])
    b = np.concatenate([
        np.ones(n),
        np.zeros(n),
        np.zeros(n),
        np.full(n, q - 1.0),
    ])
    return Polytope(a, b)


def bias_weights(pmf: np.ndarray, g_table: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell weights of the two arm means in the naive contrast's bias.

    The bias of ``E[Y|T=1] - E[Y|T=0]`` for the average effect is
    ``sum(w1 * m1) - sum(w0 * m0)`` with the weights returned here.
    """
    p1 = float(pmf @ g_table)
    p0 = 1.0 - p1
    if p1 <= 0.0 or p0 <= 0.0:
        raise ValueError("treatment mechanism is degenerate (single-arm marginal)")
    w1 = pmf * (g_table - p1) / p1
    w0 = pmf * ((1.0 - g_table) - p0) / p0
    return w1, w0


class BiasFeasibility(NamedTuple):
    feasible: bool
    c_low: float
    c_high: float


def check_bias_feasibility(pmf: np.ndarray, g_table: np.ndarray, b: float) -> BiasFeasibility:
    """Whether any valid outcome surface can realize confounding bias ``b``.

    The reachable biases over all mean surfaces in ``[0,1]`` form the closed
    interval ``[c_low, c_high]`` obtained by pushing each cell's mean to
    whichever end its weight favors; ``b`` is feasible iff it lies inside.
    """
    w1, w0 = bias_weights(pmf, g_table)
    c_high = float(np.maximum(w1, 0.0).sum() - np.minimum(w0, 0.0).sum())
    c_low = float(np.minimum(w1, 0.0).sum() - np.maximum(w0, 0.0).sum())
    return BiasFeasibility(c_low <= b <= c_high, c_low, c_high)


def confounding_bias(pmf: np.ndarray, g_table: np.ndarray, m_table: np.ndarray) -> float:
    """Bias of the naive contrast under the given outcome surface."""
    w1, w0 = bias_weights(pmf, g_table)
    return float(w1 @ m_table[1] - w0 @ m_table[0])


def build_outcome_polytope(
    design: np.ndarray,
    pmf: np.ndarray,
    g_table: np.ndarray,
    b: float,
    tol: float,
) -> Polytope:
    """Coefficient polytope for valid outcome means with pinned bias."""
    n = pmf.shape[0]
    rows = design.shape[0]
    o0, o1 = design[:n], design[n:]
    w1, w0 = bias_weights(pmf, g_table)
    c_vec = w1 @ o1 - w0 @ o0
    a = np.vstack([design, -design, c_vec[None, :], -c_vec[None, :]])
    rhs = np.concatenate([np.ones(rows), np.zeros(rows), [b + tol], [tol - b]])
    return Polytope(a, rhs)


def _draw_functions(sampler: GpSampler, n_terms: int, rng: np.random.Generator) -> np.ndarray:
    return np.stack([sampler.draw(rng).values for _ in range(n_terms)])


def sample_treatment_mechanism(
    support: SupportTable,
    interactions: InteractionSet,
    pmf: np.ndarray,
    config: PriorConfig,
    rng: np.random.Generator,
    sampler: GpSampler | None = None,
    *,
    burn_in: int | None = None,
    thin: int | None = None,
) -> TreatmentMechanism:
    """Draw one propensity surface uniformly from its coefficient polytope."""
    f_values = None
    if support.h > 0:
        if sampler is None:
            sampler = GpSampler(support.grid, config.eta, config.rho)
        f_values = _draw_functions(sampler, interactions.n_terms, rng)
    design = treatment_design(support, interactions, f_values)
    poly = build_treatment_polytope(design, pmf, config.q)
    alpha = hit_and_run_sample(poly, 1, rng, burn_in=burn_in, thin=thin)[0]
    g_table = design @ alpha
    return TreatmentMechanism(
        alpha=alpha,
        g_table=g_table,
        p_treat=float(pmf @ g_table),
        functions=f_values,
        design=design,
    )


def sample_outcome_mechanism(
    support: SupportTable,
    interactions: InteractionSet,
    pmf: np.ndarray,
    g_table: np.ndarray,
    config: PriorConfig,
    rng: np.random.Generator,
    sampler: GpSampler | None = None,
    *,
    burn_in: int | None = None,
    thin: int | None = None,
) -> OutcomeMechanism:
    """Draw one outcome surface with confounding bias pinned to the target.

    Raises :class:`EmptyPolytopeError` when no surface in the mechanism
    family reaches the target; callers treat that as a rejection.
    """
    h_values = w_values = None
    if support.h > 0:
        if sampler is None:
            sampler = GpSampler(support.grid, config.eta, config.rho)
        if config.hte:
            h_values = _draw_functions(sampler, interactions.n_terms, rng)
        w_values = _draw_functions(sampler, interactions.n_terms, rng)
    design = outcome_design(support, interactions, h_values, w_values, config.hte)
    poly = build_outcome_polytope(design, pmf, g_table, config.b, config.tol)
    theta = hit_and_run_sample(poly, 1, rng, burn_in=burn_in, thin=thin)[0]
    m_table = (design @ theta).reshape(2, support.n_cells)
    n_eff = effect_block_width(support, interactions, config.hte)
    return OutcomeMechanism(
        lambda_coeffs=theta[:n_eff],
        beta_coeffs=theta[n_eff:],
        m_table=m_table,
        hte=config.hte,
        functions_h=h_values,
        functions_w=w_values,
        design=design,
    )


def compute_truth(
    pmf: np.ndarray,
    g_table: np.ndarray,
    m_table: np.ndarray,
) -> DgpTruth:
    """Exact truth functionals: effect, naive-contrast bias, overlap index."""
    p1 = float(pmf @ g_table)
    p0 = 1.0 - p1
    ate = float(pmf @ (m_table[1] - m_table[0]))
    ey1 = float(pmf @ (g_table * m_table[1])) / p1
    ey0 = float(pmf @ ((1.0 - g_table) * m_table[0])) / p0
    occupied = pmf > POSITIVITY_MIN_MASS
    g_occ = g_table[occupied]
    index = max(
        float((p1 / g_occ).max()),
        float((p0 / (1.0 - g_occ)).max()),
    )
    return DgpTruth(
        ate=ate,
        confounding_bias=confounding_bias(pmf, g_table, m_table),
        positivity_index=index,
        ey1=ey1,
        ey0=ey0,
    )


def sample_dgp(
    config: PriorConfig,
    rng: np.random.Generator,
    *,
    max_attempts: int = MAX_DGP_ATTEMPTS,
    burn_in: int | None = None,
    thin: int | None = None,
) -> Dgp:
    """Sample a complete process, rejecting covariate draws as needed.

    Each attempt draws a fresh covariate distribution and treatment
    mechanism, checks that the bias target is inside the reachable bias
    interval, then tries to draw an outcome surface; an empty outcome
    polytope (the structured outcome family may reach less than the
    free-form interval) counts as a rejection too, discarding the covariate
    and treatment draws alike.  Raises :class:`FeasibilityExhausted` after
    ``max_attempts`` failed attempts.
    """
    support = enumerate_support(config.u, config.h, config.c)
    interactions = build_interaction_index(config.u, config.k)
    sampler = GpSampler(support.grid, config.eta, config.rho) if config.h > 0 else None

    for attempt in range(1, max_attempts + 1):
        pmf = sample_covariate_pmf(support, rng).probs
        tmech = sample_treatment_mechanism(
            support, interactions, pmf, config, rng, sampler,
            burn_in=burn_in, thin=thin,
        )
        if not check_bias_feasibility(pmf, tmech.g_table, config.b).feasible:
            continue
        try:
            omech = sample_outcome_mechanism(
                support, interactions, pmf, tmech.g_table, config, rng, sampler,
                burn_in=burn_in, thin=thin,
            )
        except EmptyPolytopeError:
            continue
        truth = compute_truth(pmf, tmech.g_table, omech.m_table)
        return Dgp(
            config=config,
            support=support,
            pmf=pmf,
            treatment=tmech,
            outcome=omech,
            truth=truth,
            provenance=DgpProvenance(iterations=attempt),
        )
    raise FeasibilityExhausted(max_attempts)


def asymptotic_bias_gcomp(dgp: Dgp) -> float:
    """Population-limit bias of arm-wise main-effects logistic adjustment.

    Fits each arm's logistic regression against the infinite-data objective
    (cell probabilities expanded over both outcome values), averages the
    fitted surfaces' contrast over the covariate distribution, and subtracts
    the true effect.  Zero whenever the arm-wise main-effects model is
    correctly specified, e.g. saturated supports.
    """
    z = np.column_stack([np.ones(dgp.support.n_cells), dgp.features()])
    zz = np.vstack([z, z])
    yy = np.concatenate([np.ones(dgp.support.n_cells), np.zeros(dgp.support.n_cells)])
    limits = []
    for t, g_t in ((1, dgp.g_table), (0, 1.0 - dgp.g_table)):
        m_t = dgp.m_table[t]
        cell_w = dgp.pmf * g_t
        ww = np.concatenate([cell_w * m_t, cell_w * (1.0 - m_t)])
        fit = fit_logistic_irls(zz, yy, weights=ww)
        limits.append(expit(z @ fit.coef))
    theta_limit = float(dgp.pmf @ (limits[0] - limits[1]))
    return theta_limit - dgp.truth.ate


def asymptotic_bias_dr(dgp: Dgp, g_bar: np.ndarray, m_bar: np.ndarray) -> float:
    """Population-limit bias of the doubly robust functional.

    ``g_bar`` and ``m_bar`` are the limits the nuisance estimators converge
    to (per-cell propensity, and per-(arm, cell) outcome means).  Exactly
    zero — in floating point, not just mathematically — when either limit
    equals the truth.
    """
    g = dgp.g_table
    ghat = np.asarray(g_bar, dtype=np.float64)
    m1, m0 = dgp.m_table[1], dgp.m_table[0]
    mh1, mh0 = m_bar[1], m_bar[0]
    t1 = dgp.pmf * (g / ghat - 1.0) * (m1 - mh1)
    t0 = dgp.pmf * ((1.0 - g) / (1.0 - ghat) - 1.0) * (m0 - mh0)
    return float(t1.sum() - t0.sum())
