"""Plug-in posterior means of feature variances and mean differences."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax

from mvalda.kernels import KernelContext, log_f_v
from mvalda.npmle import DiscreteMixing, effective_log_f_v, mean_log_likelihood
from mvalda.stats import FeatureSummary


@dataclass(frozen=True)
class PosteriorEstimates:
    mu_hat: np.ndarray
    sigma2_hat: np.ndarray


def _weighted_mean(log_terms, values):
    """``sum_i values_i e^{a_i} / sum_i e^{a_i}`` row-wise.

    Normalizing the weights first keeps the result a convex combination, so
    it never picks up the rounding of large log-numerators.
    """
    return softmax(log_terms, axis=-1) @ values


def _clip_to_support(est, mixing: DiscreteMixing):
    atoms, _ = mixing.atoms
    return np.clip(est, atoms[0], atoms[-1])


def posterior_sigma2(v, f_hat: DiscreteMixing, ctx: KernelContext):
    """Posterior mean of the feature variance given the pooled variance ``v``.

    Vectorized over ``v``; a scalar ``v`` gives a scalar. At ``v = 0`` with
    three or more degrees of freedom the ``v -> 0+`` limit is returned: atoms
    reweighted by ``atom^(-m/2)``.
    """
    scalar = np.ndim(v) == 0
    atoms, log_w, lfv = effective_log_f_v(v, f_hat, ctx)
    est = _clip_to_support(_weighted_mean(log_w[None, :] + lfv, atoms), f_hat)
    return float(est[0]) if scalar else est


def posterior_mu(x, v, f_hat: DiscreteMixing, g_hat: DiscreteMixing, ctx: KernelContext):
    """Posterior mean of the mean difference given ``(x, v)``."""
    scalar = np.ndim(x) == 0 and np.ndim(v) == 0
    x, v = np.broadcast_arrays(np.atleast_1d(np.asarray(x, float)), np.atleast_1d(np.asarray(v, float)))
    u, w = g_hat.atoms
    terms = np.log(w)[None, :] + mean_log_likelihood(x, v, f_hat, u, ctx)
    est = _clip_to_support(_weighted_mean(terms, u), g_hat)
    return float(est[0]) if scalar else est


def marginal_density_v(v, f_hat: DiscreteMixing, ctx: KernelContext):
    """Density of the pooled variance under the mixing distribution ``f_hat``."""
    scalar = np.ndim(v) == 0
    atoms, w = f_hat.atoms
    v = np.atleast_1d(np.asarray(v, dtype=float))
    dens = np.exp(logsumexp(np.log(w)[None, :] + log_f_v(v[:, None], atoms[None, :], ctx), axis=1))
    return float(dens[0]) if scalar else dens


def estimate_all(
    summary: FeatureSummary, f_hat: DiscreteMixing, g_hat: DiscreteMixing
) -> PosteriorEstimates:
    ctx = KernelContext.from_summary(summary)
    sigma2 = posterior_sigma2(summary.pooled_var, f_hat, ctx)
    mu = posterior_mu(summary.x_diff, summary.pooled_var, f_hat, g_hat, ctx)
    return PosteriorEstimates(mu_hat=np.atleast_1d(mu), sigma2_hat=np.atleast_1d(sigma2))
