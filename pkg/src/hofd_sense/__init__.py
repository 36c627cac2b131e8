"""Generalized Hoeffding-Sobol sensitivity analysis for dependent inputs."""

from .exceptions import DegenerateError, SmootherError, SpecError
from .hofd import (
    ComponentTable,
    ConvergenceReport,
    GaussSeidelConfig,
    constraint_diagnostics,
    hofd_bivariate,
    ipdv_decompose,
)
from .indices import DvpReport, SensitivityReport, dvp_sobol, generalized_indices
from .smoother import LocalPolynomialSmoother, SmootherConfig, loo_conditional_mean

__all__ = [
    "ComponentTable",
    "ConvergenceReport",
    "DegenerateError",
    "DvpReport",
    "GaussSeidelConfig",
    "LocalPolynomialSmoother",
    "SensitivityReport",
    "SmootherConfig",
    "SmootherError",
    "SpecError",
    "constraint_diagnostics",
    "dvp_sobol",
    "generalized_indices",
    "hofd_bivariate",
    "ipdv_decompose",
    "loo_conditional_mean",
]
