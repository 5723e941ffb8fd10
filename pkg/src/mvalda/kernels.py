"""Log-space conditional densities of the pooled variance and mean difference.

Given the feature variance ``sigma2``, the pooled variance ``V`` is distributed
as ``sigma2 / m * chi2_m`` and the mean difference ``X`` as
``N(mu, c * sigma2)``, independently, where ``m`` is the degrees of freedom and
``c`` the variance scale of the two-sample design.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, xlogy

from mvalda.errors import DomainError
from mvalda.stats import FeatureSummary

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class KernelContext:
    dof: int
    var_scale: float
    log_gamma_half_dof: float = field(init=False, repr=False)

    def __post_init__(self):
        if int(self.dof) != self.dof or self.dof < 1:
            raise DomainError(f"degrees of freedom must be a positive integer, got {self.dof}")
        if not self.var_scale > 0:
            raise DomainError(f"variance scale must be positive, got {self.var_scale}")
        object.__setattr__(self, "dof", int(self.dof))
        object.__setattr__(self, "var_scale", float(self.var_scale))
        object.__setattr__(self, "log_gamma_half_dof", float(gammaln(self.dof / 2.0)))

    @classmethod
    def from_summary(cls, summary: FeatureSummary) -> "KernelContext":
        return cls(summary.dof, summary.var_scale)

    @classmethod
    def from_counts(cls, n1: int, n2: int) -> "KernelContext":
        return cls(n1 + n2 - 2, (n1 + n2) / (n1 * n2))


def _check_sigma2(sigma2):
    sigma2 = np.asarray(sigma2, dtype=float)
    if np.any(~(sigma2 > 0)):
        raise DomainError("sigma2 must be strictly positive")
    return sigma2


def _check_v(v, ctx: KernelContext):
    v = np.asarray(v, dtype=float)
    if np.any(~(v >= 0)):
        raise DomainError("pooled variance must be nonnegative")
    if ctx.dof == 1 and np.any(v == 0):
        raise DomainError("density of V is unbounded at 0 for one degree of freedom")
    return v


def log_f_v(v, sigma2, ctx: KernelContext):
    """Log density of the pooled variance ``v`` given the feature variance.

    Broadcasts over ``v`` and ``sigma2``. ``v = 0`` gives ``-inf`` when
    ``dof >= 3`` and a finite value when ``dof == 2``.
    """
    v = _check_v(v, ctx)
    sigma2 = _check_sigma2(sigma2)
    half = 0.5 * ctx.dof
    rate = half / sigma2
    return half * np.log(rate) + xlogy(half - 1.0, v) - rate * v - ctx.log_gamma_half_dof


def log_normal(x, mu, var):
    return -0.5 * (LOG_2PI + np.log(var)) - 0.5 * (x - mu) ** 2 / var


def log_f_xv(x, v, mu, sigma2, ctx: KernelContext):
    """Joint log density of ``(x, v)`` given ``(mu, sigma2)``."""
    sigma2 = _check_sigma2(sigma2)
    return log_normal(x, mu, ctx.var_scale * sigma2) + log_f_v(v, sigma2, ctx)


def log_likelihood_matrix_v(summary: FeatureSummary, grid) -> np.ndarray:
    """``p x K`` matrix of ``log f_V(V_j | grid_k)``."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("variance grid must be a nonempty 1-D sequence")
    ctx = KernelContext.from_summary(summary)
    return log_f_v(summary.pooled_var[:, None], grid[None, :], ctx)
