"""Combining individual participant data (IPD) and aggregate data (AD) in
meta-analysis: variance formulas, IPD study selection and estimation."""

__version__ = "0.1.0"

from .core import (
    AdStudy,
    ConvergenceError,
    EstimabilityError,
    InputError,
    IpdStudy,
    Partition,
    SeparationError,
    StudyCollection,
    StudyValidationError,
    load_ad,
    load_ipd,
    summarize_ipd,
    write_ad,
    write_ipd,
)
from .glmm import (
    GlmmCombined,
    RandomEffectCov,
    combined_estimate_glmm,
    composite_loglik,
    fit_study_logistic,
    logistic_variance_combined,
    maximize_varcomp,
    selection_weights_logistic,
)
from .lmm import (
    VarianceComponents,
    combined_estimate_lmm,
    estimate_sigma_alpha,
    pooled_sigma,
    relative_efficiency,
    variance_ad_ma,
    variance_combined,
    variance_ipd_ma,
)
from .selection import (
    EnumerationCapError,
    SelectionInstance,
    brute_force_select,
    brute_force_worst,
    extremes_select,
    re_curve,
    select,
    ssa_select,
)

__all__ = [
    "__version__",
    "AdStudy",
    "ConvergenceError",
    "EstimabilityError",
    "InputError",
    "IpdStudy",
    "Partition",
    "SeparationError",
    "StudyCollection",
    "StudyValidationError",
    "load_ad",
    "load_ipd",
    "summarize_ipd",
    "write_ad",
    "write_ipd",
    "GlmmCombined",
    "RandomEffectCov",
    "combined_estimate_glmm",
    "composite_loglik",
    "fit_study_logistic",
    "logistic_variance_combined",
    "maximize_varcomp",
    "selection_weights_logistic",
    "VarianceComponents",
    "combined_estimate_lmm",
    "estimate_sigma_alpha",
    "pooled_sigma",
    "relative_efficiency",
    "variance_ad_ma",
    "variance_combined",
    "variance_ipd_ma",
    "EnumerationCapError",
    "SelectionInstance",
    "brute_force_select",
    "brute_force_worst",
    "extremes_select",
    "re_curve",
    "select",
    "ssa_select",
]
