"""Linear discriminant rules: the adaptive plug-in rule, naive Bayes and the oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from mvalda.errors import DomainError, ShapeError
from mvalda.npmle import (
    VARIANCE_FLOOR_RATIO,
    DiscreteMixing,
    SolverConfig,
    fit_mean_mixing,
    fit_variance_mixing,
)
from mvalda.posterior import estimate_all
from mvalda.stats import FeatureSummary, LabeledMatrix, summarize

METHODS = ("MVA", "NB", "ORACLE")


@dataclass(frozen=True)
class FittedModel:
    """Coefficients of a linear rule ``delta(x) = a . x + a0 - log_prior_odds``.

    ``f_hat`` and ``g_hat`` are present only for the adaptive rule.
    """

    coefficients: np.ndarray
    intercept: float
    log_prior_odds: float
    mu_hat: np.ndarray
    sigma2_hat: np.ndarray
    method_tag: str
    dims: tuple[int, int, int]
    f_hat: Optional[DiscreteMixing] = None
    g_hat: Optional[DiscreteMixing] = None

    def __post_init__(self):
        if self.method_tag not in METHODS:
            raise DomainError(f"unknown method tag {self.method_tag!r}")
        for name in ("coefficients", "mu_hat", "sigma2_hat"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))

    @property
    def p(self) -> int:
        return self.coefficients.shape[0]


def _linear_model(mu, sigma2, mean1, mean2, n1, n2, tag, log_prior_odds, f_hat=None, g_hat=None):
    a = mu / sigma2
    a0 = -0.5 * float(np.sum(a * (mean1 + mean2)))
    return FittedModel(
        coefficients=a,
        intercept=a0,
        log_prior_odds=log_prior_odds,
        mu_hat=mu,
        sigma2_hat=sigma2,
        method_tag=tag,
        dims=(a.shape[0], n1, n2),
        f_hat=f_hat,
        g_hat=g_hat,
    )


def _log_prior_odds(n1: int, n2: int) -> float:
    # log(pi2 / pi1) with pi_k = n_k / n
    return math.log(n2 / n1)


def fit_mva(data: LabeledMatrix, config: Optional[SolverConfig] = None) -> FittedModel:
    """Fit the mean-and-variance adaptive rule.

    Pooled variances and mean differences are replaced by their posterior
    means under grid NPMLE mixing distributions; the intercept uses the raw
    group means.
    """
    config = config or SolverConfig()
    s = summarize(data)
    return fit_mva_from_summary(s, config)


def fit_mva_from_summary(s: FeatureSummary, config: Optional[SolverConfig] = None) -> FittedModel:
    config = config or SolverConfig()
    f_hat = fit_variance_mixing(s, config)
    g_hat = fit_mean_mixing(s, f_hat, config)
    post = estimate_all(s, f_hat, g_hat)
    return _linear_model(
        post.mu_hat, post.sigma2_hat, s.mean_g1, s.mean_g2, s.n1, s.n2,
        "MVA", _log_prior_odds(s.n1, s.n2), f_hat, g_hat,
    )


def fit_naive_bayes(data: LabeledMatrix) -> FittedModel:
    """Plug in raw mean differences and pooled variances (floored at ``1e-12 * max``)."""
    s = summarize(data)
    vmax = float(s.pooled_var.max())
    floor = VARIANCE_FLOOR_RATIO * vmax if vmax > 0 else 1.0
    sigma2 = np.maximum(s.pooled_var, floor)
    return _linear_model(
        s.x_diff, sigma2, s.mean_g1, s.mean_g2, s.n1, s.n2, "NB", _log_prior_odds(s.n1, s.n2)
    )


def oracle_model(mu1, mu2, sigma2, priors=(0.5, 0.5)) -> FittedModel:
    """The diagonal Bayes rule under known class means and variances."""
    mu1 = np.asarray(mu1, dtype=float)
    mu2 = np.asarray(mu2, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    if not (mu1.shape == mu2.shape == sigma2.shape) or mu1.ndim != 1:
        raise ShapeError("mu1, mu2 and sigma2 must be 1-D of equal length")
    if np.any(~(sigma2 > 0)):
        raise DomainError("sigma2 must be strictly positive")
    pi1, pi2 = priors
    if not (pi1 > 0 and pi2 > 0):
        raise DomainError("priors must be positive")
    return _linear_model(mu1 - mu2, sigma2, mu1, mu2, 0, 0, "ORACLE", math.log(pi2 / pi1))


def score(model: FittedModel, x_new):
    """Linear discriminant score; rows of a 2-D input are scored independently."""
    x = np.asarray(x_new, dtype=float)
    if x.shape[-1:] != (model.p,) or x.ndim > 2:
        raise ShapeError(f"expected {model.p} features, got input of shape {x.shape}")
    s = (np.atleast_2d(x) * model.coefficients).sum(axis=1) + model.intercept - model.log_prior_odds
    return float(s[0]) if x.ndim == 1 else s


def predict(model: FittedModel, x_new):
    """Label 1 when the score is nonnegative, else 2."""
    return predict_from_score(score(model, x_new))


def oracle_rule(mu1, mu2, sigma2, priors, x_new):
    model = oracle_model(mu1, mu2, sigma2, priors)
    s = score(model, x_new)
    return s, predict_from_score(s)


def predict_from_score(s):
    if np.ndim(s) == 0:
        return 1 if s >= 0 else 2
    return np.where(np.asarray(s) >= 0, 1, 2)
