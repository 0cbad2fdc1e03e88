"""Moment tail estimators, full-sample bootstrap intervals and their Monte-Carlo validation."""
from __future__ import annotations

__version__ = "0.1.0"

from .bootstrap import (
    BootstrapDistribution,
    ConfidenceInterval,
    Method,
    ResamplePlan,
    Statistic,
    Target,
    bootstrap_ci_for,
    bootstrap_distribution,
    empirical_quantile,
    interval,
    resample,
)
from .core import Sample, TailFit, fit_tail, population_moments
from .errors import EstimationError, InputError, TailbootError
from .limits import LimitLawDraws, WienerPath, limit_functionals, limit_law_sample, sample_wiener
from .models import REFERENCE_MODELS, ModelSpec, draw, true_tail_quantile
from .rng import DEFAULT_SEED, substream
from .study import StudyConfig, coverage_study, k_sweep
from .tailfuncs import (
    box_cox,
    estimate_high_quantile,
    estimate_tail_probability,
    q_gamma,
    sigma_sq,
    w_gamma,
)

__all__ = [
    "BootstrapDistribution",
    "ConfidenceInterval",
    "DEFAULT_SEED",
    "EstimationError",
    "InputError",
    "LimitLawDraws",
    "Method",
    "ModelSpec",
    "REFERENCE_MODELS",
    "ResamplePlan",
    "Sample",
    "Statistic",
    "StudyConfig",
    "TailFit",
    "TailbootError",
    "Target",
    "WienerPath",
    "bootstrap_ci_for",
    "bootstrap_distribution",
    "box_cox",
    "coverage_study",
    "draw",
    "empirical_quantile",
    "estimate_high_quantile",
    "estimate_tail_probability",
    "fit_tail",
    "interval",
    "k_sweep",
    "limit_functionals",
    "limit_law_sample",
    "population_moments",
    "q_gamma",
    "resample",
    "sample_wiener",
    "sigma_sq",
    "substream",
    "true_tail_quantile",
    "w_gamma",
]
