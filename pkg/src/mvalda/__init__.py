"""Mean-and-variance adaptive linear discriminant rule for two-class data.

Per-feature mean differences and pooled variances are shrunk by posterior
means under nonparametric (grid) maximum-likelihood estimates of their
mixing distributions, then plugged into the diagonal Bayes rule.
"""

from mvalda.classifier import (
    FittedModel,
    fit_mva,
    fit_naive_bayes,
    oracle_model,
    oracle_rule,
    predict,
    score,
)
from mvalda.errors import DegenerateDataError, DomainError, ShapeError, ValidationError
from mvalda.kernels import KernelContext, log_f_v, log_f_xv, log_likelihood_matrix_v
from mvalda.npmle import (
    DiscreteMixing,
    SolverConfig,
    SolverResult,
    build_mean_grid,
    build_variance_grid,
    fit_mean_mixing,
    fit_variance_mixing,
    solve_mixture_weights,
)
from mvalda.posterior import (
    PosteriorEstimates,
    estimate_all,
    marginal_density_v,
    posterior_mu,
    posterior_sigma2,
)
from mvalda.stats import FeatureSummary, LabeledMatrix, summarize

__version__ = "0.1.0"

__all__ = [
    "DegenerateDataError",
    "DiscreteMixing",
    "DomainError",
    "FeatureSummary",
    "FittedModel",
    "KernelContext",
    "LabeledMatrix",
    "PosteriorEstimates",
    "ShapeError",
    "SolverConfig",
    "SolverResult",
    "ValidationError",
    "build_mean_grid",
    "build_variance_grid",
    "estimate_all",
    "fit_mean_mixing",
    "fit_mva",
    "fit_naive_bayes",
    "fit_variance_mixing",
    "log_f_v",
    "log_f_xv",
    "log_likelihood_matrix_v",
    "marginal_density_v",
    "oracle_model",
    "oracle_rule",
    "posterior_mu",
    "posterior_sigma2",
    "predict",
    "score",
    "solve_mixture_weights",
    "summarize",
]
