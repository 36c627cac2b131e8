"""Input laws: Gaussian mixtures, bivariate copulas and admissibility checks."""

from .admissibility import AdmissibilityReport, check_c2_gaussian, precision_gap_eigenvalues
from .copula import (
    CopulaSpec,
    TabulatedCopula,
    copula_cdf,
    copula_decompose,
    copula_density,
    copula_lower_bound,
    exponential_generator,
    frank_bound,
    tabulate_generator,
    xlogx_generator,
)
from .mixture import (
    GaussianMixtureSpec,
    centered_mixture,
    mixture_density_wrt_nu,
    mixture_logpdf,
    mixture_moments,
    mixture_pdf,
    sample_conditional,
    sample_mixture,
)
from .pairs import PairStructure

__all__ = [
    "AdmissibilityReport",
    "CopulaSpec",
    "GaussianMixtureSpec",
    "PairStructure",
    "TabulatedCopula",
    "centered_mixture",
    "check_c2_gaussian",
    "copula_cdf",
    "copula_decompose",
    "copula_density",
    "copula_lower_bound",
    "exponential_generator",
    "frank_bound",
    "mixture_density_wrt_nu",
    "mixture_logpdf",
    "mixture_moments",
    "mixture_pdf",
    "precision_gap_eigenvalues",
    "sample_conditional",
    "sample_mixture",
    "tabulate_generator",
    "xlogx_generator",
]
