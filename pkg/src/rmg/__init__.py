"""Restricted-covariance multivariate GARCH (RMG) with dynamic market betas.

The conditional covariance of N assets is restricted to a market
eigen-component plus a degenerate bulk, so the inverse and square root of
H(t) are analytic and every per-day operation is O(N). Submodules:

- :mod:`rmg.panel`       panel loading / normalization
- :mod:`rmg.targeting`   spectral covariance targeting
- :mod:`rmg.recursion`   exact and large-N state recursions
- :mod:`rmg.likelihood`  analytic H^(+-1/2), Gaussian / Student-t likelihood
- :mod:`rmg.estimation`  constrained MLE, standard errors, tail-index profile
- :mod:`rmg.simulation`  Monte Carlo paths and predicted-return draws
- :mod:`rmg.baselines`   univariate GARCH(1,1) per asset
- :mod:`rmg.analytics`   betas, correlations, risk measure, leverage, tests
- :mod:`rmg.cli`         the ``rmg`` command

Hot loops run in a compiled extension when available; set
``RMG_PURE_PYTHON=1`` to force the NumPy fallback
(:func:`kernel_backend` reports the active lane).
"""
from __future__ import annotations

from ._kernels import backend as kernel_backend
from .analytics import (
    acf_abs,
    cliffs_delta,
    conditional_correlations,
    deco_correlation,
    leverage_asymmetry,
    pair_delta,
    risk_measure,
    sector_median_corr,
)
from .baselines import UvgFit, UvgParams, uvg_filter, uvg_fit, uvg_fit_panel, uvg_loglik
from .errors import (
    AnalyticsError,
    EstimationError,
    LikelihoodError,
    NotConvergedError,
    PanelError,
    RecursionFailure,
    RmgError,
    TargetingError,
)
from .estimation import (
    FitOptions,
    FitReport,
    NuProfile,
    fit,
    fit_profiled,
    fit_tail_index,
    hessian_se,
    param_names,
    profile_nu,
)
from .likelihood import (
    NoiseModel,
    degarch,
    inv_sqrt_apply,
    loglik_day,
    loglik_path,
    loglik_value,
    sqrt_apply,
)
from .panel import ReturnsPanel, load_panel, normalize, write_panel
from .recursion import (
    CovState,
    ModelParams,
    ProjectedReturns,
    StatePath,
    beta_drive,
    overlap_persistence_margin,
    positivity_floor,
    project_returns,
    step_exact,
    step_large_n,
)
from .simulation import make_rng, pdf_chi2, predicted_returns, simulate_path
from .targeting import (
    TargetSpec,
    leading_eigenpair,
    sample_covariance_apply,
    target_from_panel,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "kernel_backend",
    # panel
    "ReturnsPanel", "load_panel", "normalize", "write_panel",
    # targeting
    "TargetSpec", "sample_covariance_apply", "leading_eigenpair", "target_from_panel",
    # recursion
    "CovState", "StatePath", "ModelParams", "ProjectedReturns", "project_returns",
    "beta_drive", "step_exact", "step_large_n", "positivity_floor",
    "overlap_persistence_margin",
    # likelihood
    "NoiseModel", "inv_sqrt_apply", "sqrt_apply", "loglik_day", "loglik_path",
    "loglik_value", "degarch",
    # estimation
    "FitOptions", "FitReport", "NuProfile", "fit", "fit_profiled", "profile_nu",
    "hessian_se", "fit_tail_index", "param_names",
    # simulation
    "make_rng", "simulate_path", "predicted_returns", "pdf_chi2",
    # baselines
    "UvgParams", "UvgFit", "uvg_filter", "uvg_loglik", "uvg_fit", "uvg_fit_panel",
    # analytics
    "conditional_correlations", "deco_correlation", "sector_median_corr",
    "risk_measure", "leverage_asymmetry", "acf_abs", "pair_delta", "cliffs_delta",
    # errors
    "RmgError", "PanelError", "TargetingError", "NotConvergedError",
    "RecursionFailure", "LikelihoodError", "EstimationError", "AnalyticsError",
]
