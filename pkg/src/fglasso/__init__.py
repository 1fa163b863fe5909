"""Feasible graphical-lasso GLS for large seemingly unrelated regression
systems, with the OLS/GLS/FGLS baselines, simulation designs, penalty
selection by cross-validation, theory diagnostics, and a Monte-Carlo harness.
"""

from .dgp import CounterStream, PrecisionDesign, SimSpec, build_precision, simulate
from .diagnostics import (
    CoverageExperimentSpec,
    RateExperimentSpec,
    coverage_experiment,
    incoherence,
    rate_experiment,
    recovery_check,
)
from .glasso import (
    GlassoConfig,
    GlassoResult,
    glasso_solve,
    kkt_residual,
    regularization_path,
)
from .harness import McReport, SweepSpec, parse_report, render_table, run_sweep
from .modelselect import CvResult, CvSpec, cross_validate, default_lambda_grid
from .sur import (
    FitResult,
    SurDataset,
    fit_fglasso,
    fit_fgls,
    fit_gls,
    fit_ols,
    gls_standard_errors,
    residual_covariance,
)

__all__ = [
    "CounterStream",
    "CoverageExperimentSpec",
    "CvResult",
    "CvSpec",
    "FitResult",
    "GlassoConfig",
    "GlassoResult",
    "McReport",
    "PrecisionDesign",
    "RateExperimentSpec",
    "SimSpec",
    "SurDataset",
    "SweepSpec",
    "build_precision",
    "coverage_experiment",
    "cross_validate",
    "default_lambda_grid",
    "fit_fglasso",
    "fit_fgls",
    "fit_gls",
    "fit_ols",
    "glasso_solve",
    "gls_standard_errors",
    "incoherence",
    "kkt_residual",
    "parse_report",
    "rate_experiment",
    "recovery_check",
    "regularization_path",
    "render_table",
    "residual_covariance",
    "run_sweep",
    "simulate",
]

__version__ = "0.1.0"
