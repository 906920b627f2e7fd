"""Confounder-adjusted survival curves for categorical treatments."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .adjust import METHODS, AdjustedSurv, MethodSpec, adjustedsurv, compute_iptw_weights
from .data import ColumnBindings, SurvDataset, expand_design, parse_formula, validate_dataset
from .effects import EffectEstimate, cif, curve_diff, rmst, rmst_diff, surv_quantile
from .errors import AdjSurvError
from .inference import BootstrapResult, approx_ci, bootstrap_curves
from .nonparam import (StepFunction, SurvCurve, censoring_km, force_bounds, pava_nonincreasing,
                       pseudo_values, step_eval, step_integrate, weighted_km)
from .simoracle import DGPSpec, simulate_dgp, true_curve, true_quantile

__all__ = [
    "BACKEND", "METHODS", "AdjSurvError", "AdjustedSurv", "BootstrapResult", "ColumnBindings",
    "DGPSpec", "EffectEstimate", "MethodSpec", "StepFunction", "SurvCurve", "SurvDataset",
    "adjustedsurv", "approx_ci", "bootstrap_curves", "censoring_km", "cif",
    "compute_iptw_weights", "curve_diff", "expand_design", "force_bounds", "parse_formula",
    "pava_nonincreasing", "pseudo_values", "rmst", "rmst_diff", "simulate_dgp", "step_eval",
    "step_integrate", "surv_quantile", "true_curve", "true_quantile", "validate_dataset",
    "weighted_km",
]
