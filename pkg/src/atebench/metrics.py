"""Monte-Carlo summaries: per-process bias/coverage/MSE and exceedance curves.

The headline display is the cross-process reliability curve: for each bias
threshold ``b``, the fraction of sampled processes whose Monte-Carlo bias
exceeds ``b`` in absolute value.  An estimator is reliable on the prior when
that curve hugs zero.  Coverage tables report per-process coverage medians
with interquartile ranges, optionally stratified by how close each process
sails to a positivity violation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

#: Number of points on an automatically chosen threshold grid.
CURVE_POINTS = 200

#: Upper percentile of |metric| used to end the automatic threshold grid.
CURVE_PERCENTILE = 99.0

#: Positivity-index cutpoints between the minimal/moderate/severe strata.
STRATUM_CUTS = (10.0, 100.0)


@dataclass(frozen=True)
class DgpMetrics:
    """Replicate-level summary of one estimator on one process."""

    dgp_id: int
    estimator_id: str
    n: int
    bias: float
    coverage: float
    mse: float
    n_reps: int
    n_failures: int
    mean_point: float
    sd_point: float
    mean_se: float


@dataclass(frozen=True)
class ReliabilityCurve:
    """Exceedance of |metric| across processes on a threshold grid."""

    estimator_id: str
    n: int
    metric: str
    thresholds: np.ndarray
    exceedance: np.ndarray


@dataclass(frozen=True)
class PositivityStratum:
    """A labelled band of the positivity index."""

    label: str
    bounds: tuple


def dgp_metrics(
    points: np.ndarray,
    ci_low: np.ndarray,
    ci_high: np.ndarray,
    se: np.ndarray,
    truth: float,
    *,
    dgp_id: int = 0,
    estimator_id: str = "",
    n: int = 0,
    n_failures: int = 0,
) -> DgpMetrics:
    """Reduce one estimator's successful replicates against the known truth.

    Coverage counts strict containment (``ci_low < truth < ci_high``);
    ``sd_point`` is the population standard deviation, so
    ``mse == bias**2 + sd_point**2`` up to rounding.
    """
    points = np.asarray(points, dtype=np.float64)
    s = points.shape[0]
    if s == 0:
        nan = float("nan")
        return DgpMetrics(dgp_id, estimator_id, n, nan, nan, nan, 0, n_failures,
                          nan, nan, nan)
    mean_point = float(points.mean())
    covered = (np.asarray(ci_low) < truth) & (truth < np.asarray(ci_high))
    return DgpMetrics(
        dgp_id=dgp_id,
        estimator_id=estimator_id,
        n=n,
        bias=float(mean_point - truth),
        coverage=float(covered.mean()),
        mse=float(np.mean((points - truth) ** 2)),
        n_reps=s,
        n_failures=n_failures,
        mean_point=mean_point,
        sd_point=float(points.std(ddof=0)),
        mean_se=float(np.asarray(se, dtype=np.float64).mean()),
    )


def threshold_grid(values: np.ndarray, n_points: int = CURVE_POINTS) -> np.ndarray:
    """Evenly spaced thresholds from 0 to the 99th percentile of |values|."""
    abs_v = np.abs(np.asarray(values, dtype=np.float64))
    hi = float(np.percentile(abs_v, CURVE_PERCENTILE))
    return np.linspace(0.0, hi, n_points)


def reliability_curve(
    metrics: Sequence[DgpMetrics] | np.ndarray,
    thresholds: np.ndarray | None = None,
    *,
    metric: str = "bias",
) -> ReliabilityCurve:
    """Exceedance function of |metric| across processes on a threshold grid.

    ``exceedance[i]`` is the fraction of processes with ``|metric| >
    thresholds[i]`` (strictly greater, so the curve starts below 1 whenever
    some value is exactly zero and always ends at 0 on the max threshold).
    Accepts either a list of :class:`DgpMetrics` or a bare value array.
    """
    estimator_id, n = "", 0
    if len(metrics) and isinstance(metrics[0], DgpMetrics):
        estimator_id = metrics[0].estimator_id
        n = metrics[0].n
        values = np.array([getattr(m, metric) for m in metrics], dtype=np.float64)
    else:
        values = np.asarray(metrics, dtype=np.float64)
    abs_v = np.abs(values)
    if thresholds is None:
        thresholds = threshold_grid(abs_v)
    thresholds = np.asarray(thresholds, dtype=np.float64)
    exceedance = (abs_v[None, :] > thresholds[:, None]).mean(axis=1)
    return ReliabilityCurve(
        estimator_id=estimator_id,
        n=n,
        metric=metric,
        thresholds=thresholds,
        exceedance=exceedance,
    )


def coverage_table(metrics: Iterable[DgpMetrics]) -> list:
    """Median and interquartile range of per-process coverage.

    Returns one row ``(estimator_id, n, n_dgps, median, q25, q75)`` per
    (estimator, sample size) group, sorted; callers wanting a per-scenario
    table group their metrics first.
    """
    groups: dict = {}
    for m in metrics:
        if np.isfinite(m.coverage):
            groups.setdefault((m.estimator_id, m.n), []).append(m.coverage)
    rows = []
    for (estimator_id, n) in sorted(groups):
        cov = np.asarray(groups[(estimator_id, n)], dtype=np.float64)
        q25, median, q75 = np.percentile(cov, [25.0, 50.0, 75.0])
        rows.append((estimator_id, n, cov.shape[0], float(median), float(q25), float(q75)))
    return rows


def positivity_stratum(truth) -> PositivityStratum:
    """Bucket a process by its positivity index: minimal/moderate/severe.

    Accepts a truth object carrying ``positivity_index`` or the bare index.
    """
    index = float(getattr(truth, "positivity_index", truth))
    lo, hi = STRATUM_CUTS
    if index <= lo:
        return PositivityStratum("minimal", (1.0, lo))
    if index <= hi:
        return PositivityStratum("moderate", (lo, hi))
    return PositivityStratum("severe", (hi, float("inf")))
