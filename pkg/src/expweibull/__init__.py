"""Exponentiated-Weibull lifetime models under type II censoring."""

__version__ = "0.1.0"

from ._validation import EedTheta, Theta
from .datasets import Dataset, apply_type2_censoring, load_ballbearings, load_carbon_fibre, load_csv, rate_to_r
from .distributions import (
    eed_cdf,
    ewd_cdf,
    ewd_hazard,
    ewd_logcdf,
    ewd_logpdf,
    ewd_logsf,
    ewd_pdf,
    ewd_quantile,
    ewd_sample,
    psi,
    score_components,
)
from .estimator import ExponentiatedWeibull
from .exceptions import (
    DataError,
    DomainError,
    IllConditionedWarning,
    InvalidParameterError,
    NonConvergenceError,
    NumericalOverflowError,
    QuadratureWarning,
    SingularInformationError,
)
from .fisher import FisherMatrix, asymptotic_ci, fisher_entry, fisher_matrix, log_hazard_partials, lrt_beta_equals_one
from .hazard_shape import classify_region, s_of_z, shape_report, sign_scan
from .likelihood import CensoredSample, log_likelihood, numerical_hessian, score
from .mle import FitConfig, FitResult, eed_fixed_point, fit, fit_backfitting, fit_direct, profile_loglik
from .simulation import run_simulation
