"""Grid-based nonparametric maximum likelihood for the mixing distributions.

The variance mixing distribution is fitted to the pooled variances alone.
The mean-difference mixing distribution is then fitted to ``(X_j, V_j)`` with
the variance mixing distribution integrated out.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.special import logsumexp

from mvalda.errors import DegenerateDataError, DomainError
from mvalda.kernels import KernelContext, log_f_v, log_likelihood_matrix_v, log_normal
from mvalda.stats import FeatureSummary

VARIANCE_FLOOR_RATIO = 1e-12
WEIGHT_TRUNCATION = 1e-12
# Subnormal arithmetic is orders of magnitude slower; values this small are
# below double resolution relative to the row maximum of 1.
_FLUSH = 1e-300
# Bounds the (chunk, L, K) temporary in the mean-mixing likelihood.
_CHUNK_ELEMENTS = 2_000_000


@dataclass(frozen=True)
class DiscreteMixing:
    """A distribution on finitely many support points."""

    support: np.ndarray
    weights: np.ndarray
    # solver diagnostics, when produced by a fit
    objective: Optional[float] = field(default=None, compare=False)
    iters: Optional[int] = field(default=None, compare=False)

    def __post_init__(self):
        support = np.array(self.support, dtype=float).ravel()
        weights = np.array(self.weights, dtype=float).ravel()
        if support.size == 0 or support.shape != weights.shape:
            raise DomainError("support and weights must be nonempty and of equal length")
        if np.any(np.diff(support) <= 0):
            raise DomainError("support must be strictly increasing")
        if not np.all(np.isfinite(support)):
            raise DomainError("support must be finite")
        if np.any(~(weights >= 0)) or abs(weights.sum() - 1.0) > 1e-10:
            raise DomainError("weights must be nonnegative and sum to 1")
        support.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def point_mass(cls, at: float) -> "DiscreteMixing":
        return cls([at], [1.0])

    @property
    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        """Support points and weights restricted to positive weight."""
        keep = self.weights > 0
        return self.support[keep], self.weights[keep]


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 2000
    rel_tol: float = 1e-8
    grid_size_variance: int = 100
    grid_size_mean: int = 100

    def __post_init__(self):
        for name in ("max_iters", "grid_size_variance", "grid_size_mean"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise DomainError(f"{name} must be a positive integer, got {value}")
        if not self.rel_tol > 0:
            raise DomainError(f"rel_tol must be positive, got {self.rel_tol}")


class SolverResult(NamedTuple):
    weights: np.ndarray
    objective: float
    iters: int


def build_variance_grid(pooled_var, K: int) -> np.ndarray:
    """``K`` log-equispaced points spanning the observed pooled variances.

    Values below ``1e-12 * max(V)`` count as that floor for the lower end.
    Collapses to a single point when all variances coincide.

    >>> build_variance_grid([1.0, 100.0], 3)
    array([  1.,  10., 100.])
    """
    v = np.asarray(pooled_var, dtype=float).ravel()
    if K < 1:
        raise DomainError("grid size must be positive")
    if v.size == 0 or not np.any(v > 0):
        raise DegenerateDataError("all pooled variances are zero; no variance grid exists")
    hi = float(v.max())
    lo = max(float(v.min()), VARIANCE_FLOOR_RATIO * hi)
    if lo == hi or K == 1:
        return np.array([lo])
    grid = np.exp(np.linspace(np.log(lo), np.log(hi), K))
    # pin the endpoints against exp/log round trip
    grid[0], grid[-1] = lo, hi
    return grid


def build_mean_grid(x_diff, L: int) -> np.ndarray:
    """``L`` equispaced points on ``[min X, max X]``."""
    x = np.asarray(x_diff, dtype=float).ravel()
    if x.size == 0:
        raise DomainError("mean differences are empty")
    if L < 1:
        raise DomainError("grid size must be positive")
    lo, hi = float(x.min()), float(x.max())
    if lo == hi or L == 1:
        return np.array([lo])
    return np.linspace(lo, hi, L)


def _objective(P, w, shift):
    dens = np.maximum(P @ w, np.finfo(float).tiny)
    return dens, shift + float(np.mean(np.log(dens)))


def solve_mixture_weights(
    log_lik,
    config: Optional[SolverConfig] = None,
    callback: Optional[Callable[[int, float], None]] = None,
) -> SolverResult:
    """Maximize the mean log mixture likelihood over the weight simplex.

    Runs the multiplicative fixed-point (EM) update from uniform weights until
    the change of the objective drops below ``config.rel_tol`` relative to
    the row-max-shifted objective (floored at 1), or ``config.max_iters`` is
    reached. ``callback(iteration, objective)`` is
    called with the starting objective (iteration 0) and after every update.
    Weights under ``1e-12`` are zeroed at the end and the rest renormalized.
    """
    config = config or SolverConfig()
    L = np.asarray(log_lik, dtype=float)
    if L.ndim != 2 or L.shape[1] == 0 or L.shape[0] == 0:
        raise DomainError(f"log-likelihood must be a nonempty 2-D matrix, got shape {L.shape}")
    if np.isnan(L).any() or np.isposinf(L).any():
        raise DomainError("log-likelihood contains NaN or +inf")
    p, K = L.shape
    rowmax = L.max(axis=1)
    dead = ~np.isfinite(rowmax)
    if dead.any():
        j = int(np.flatnonzero(dead)[0])
        raise DegenerateDataError(f"feature {j} has zero likelihood under every grid point")
    P = np.exp(L - rowmax[:, None])
    P[P < _FLUSH] = 0.0
    shift = float(np.mean(rowmax))
    PT = np.ascontiguousarray(P.T)

    w = np.full(K, 1.0 / K)
    dens, obj = _objective(P, w, shift)
    if callback is not None:
        callback(0, obj)
    iters = 0
    for iters in range(1, config.max_iters + 1):
        w = w * (PT @ (1.0 / dens)) / p
        w[w < _FLUSH] = 0.0
        w /= w.sum()
        dens, new = _objective(P, w, shift)
        if callback is not None:
            callback(iters, new)
        # measured against the shift-free part so that row shifts (which move
        # the objective by a constant) do not change the stopping iteration
        done = abs(new - obj) <= config.rel_tol * max(1.0, abs(obj - shift))
        obj = new
        if done:
            break

    if K > 1 and np.any(w < WEIGHT_TRUNCATION):
        w = np.where(w < WEIGHT_TRUNCATION, 0.0, w)
        w /= w.sum()
        _, obj = _objective(P, w, shift)
    return SolverResult(w, obj, iters)


def variance_row_mask(summary: FeatureSummary) -> np.ndarray:
    """Features whose pooled variance carries likelihood under a positive grid.

    With three or more degrees of freedom a zero pooled variance has zero
    density under every positive variance, so those rows are left out of the
    variance fit.
    """
    if summary.dof >= 3:
        return summary.pooled_var > 0
    return np.ones(summary.p, dtype=bool)


def fit_variance_mixing(
    summary: FeatureSummary,
    config: Optional[SolverConfig] = None,
    grid=None,
) -> DiscreteMixing:
    """Grid NPMLE of the variance mixing distribution from the pooled variances.

    ``grid`` overrides the log-equispaced default built from the data.
    """
    config = config or SolverConfig()
    if grid is None:
        grid = build_variance_grid(summary.pooled_var, config.grid_size_variance)
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0):
        raise DomainError("variance grid must be positive")
    rows = variance_row_mask(summary)
    if not rows.any():
        raise DegenerateDataError("all pooled variances are zero")
    log_lik = log_likelihood_matrix_v(summary, grid)[rows]
    result = solve_mixture_weights(log_lik, config)
    return DiscreteMixing(grid, result.weights, result.objective, result.iters)


def effective_log_f_v(v, f_hat: DiscreteMixing, ctx: KernelContext):
    """``log f_V(v_j | atom_k)`` over the positive-weight atoms of ``f_hat``.

    Returns ``(atoms, log_w, lfv)`` with ``lfv`` of shape ``(len(v), n_atoms)``.
    With three or more degrees of freedom every density vanishes at ``v = 0``;
    those rows hold the ``v -> 0+`` limit with the common factor
    ``v^(m/2 - 1)`` removed, so ratios across atoms stay the limiting ones.
    """
    atoms, w = f_hat.atoms
    v = np.atleast_1d(np.asarray(v, dtype=float))
    lfv = log_f_v(v[:, None], atoms[None, :], ctx)
    if ctx.dof >= 3:
        zero = v == 0
        if zero.any():
            half = 0.5 * ctx.dof
            lfv[zero] = half * np.log(half / atoms) - ctx.log_gamma_half_dof
    return atoms, np.log(w), lfv


def mean_log_likelihood(x, v, f_hat: DiscreteMixing, u, ctx: KernelContext) -> np.ndarray:
    """``log sum_k w_k f_XV(x_j, v_j | u_l, v_k)`` as a ``p x L`` matrix."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    u = np.asarray(u, dtype=float)
    atoms, log_w, lfv = effective_log_f_v(v, f_hat, ctx)
    base = log_w[None, :] + lfv  # (p, K)
    var = ctx.var_scale * atoms  # (K,)
    p, L, K = x.size, u.size, atoms.size
    out = np.empty((p, L))
    step = max(1, _CHUNK_ELEMENTS // max(1, L * K))
    for s in range(0, p, step):
        e = min(p, s + step)
        terms = base[s:e, None, :] + log_normal(x[s:e, None, None], u[None, :, None], var[None, None, :])
        out[s:e] = logsumexp(terms, axis=2)
    return out


def fit_mean_mixing(
    summary: FeatureSummary,
    f_hat: DiscreteMixing,
    config: Optional[SolverConfig] = None,
    grid=None,
) -> DiscreteMixing:
    """Grid NPMLE of the mean-difference mixing distribution given ``f_hat``."""
    config = config or SolverConfig()
    if grid is None:
        grid = build_mean_grid(summary.x_diff, config.grid_size_mean)
    grid = np.asarray(grid, dtype=float)
    ctx = KernelContext.from_summary(summary)
    log_lik = mean_log_likelihood(summary.x_diff, summary.pooled_var, f_hat, grid, ctx)
    result = solve_mixture_weights(log_lik, config)
    return DiscreteMixing(grid, result.weights, result.objective, result.iters)
