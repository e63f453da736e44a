from .ate import (
    ESTIMATOR_IDS,
    REGISTRY,
    EstimateResult,
    EstimatorError,
    NuisanceFit,
    Z_CRIT,
    compute_eif,
    estimate,
)

__all__ = [
    "ESTIMATOR_IDS",
    "REGISTRY",
    "EstimateResult",
    "EstimatorError",
    "NuisanceFit",
    "Z_CRIT",
    "compute_eif",
    "estimate",
]
