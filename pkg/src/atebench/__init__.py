"""Monte-Carlo benchmark harness for average-treatment-effect estimators.

Samples discrete causal data-generating processes from a nonparametric prior
(uniform covariate distributions, Gaussian-process-shaped mechanisms, a
confounding-bias constraint), simulates datasets, runs a panel of ATE
estimators, and summarizes bias, coverage, and MSE across the sampled
processes.
"""

__version__ = "0.1.0"

from .universe import PriorConfig
from .mechanisms import Dgp, FeasibilityExhausted, sample_dgp
from .datagen import Dataset, sample_dataset
from .estimators import ESTIMATOR_IDS, estimate

__all__ = [
    "PriorConfig",
    "Dgp",
    "FeasibilityExhausted",
    "sample_dgp",
    "Dataset",
    "sample_dataset",
    "ESTIMATOR_IDS",
    "estimate",
    "__version__",
]
