"""Feature screening, min-max scaling and leave-one-out evaluation for real data."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats as sps

from mvalda.classifier import fit_mva, fit_naive_bayes, predict
from mvalda.errors import DomainError, ValidationError
from mvalda.npmle import SolverConfig
from mvalda.stats import LabeledMatrix, summarize

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScreeningResult:
    kept_indices: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    alpha: float

    def rows(self, names: Optional[Sequence[str]] = None):
        """``(feature, t, p, kept)`` tuples for CSV export."""
        kept = np.zeros(self.t_stats.size, dtype=bool)
        kept[self.kept_indices] = True
        for j in range(self.t_stats.size):
            name = names[j] if names is not None else str(j)
            yield name, float(self.t_stats[j]), float(self.p_values[j]), int(kept[j])


def t_test_screen(data: LabeledMatrix, alpha: float = 0.2) -> ScreeningResult:
    """Keep features whose pooled two-sample t-test has two-sided p < ``alpha``.

    A feature with zero pooled variance is kept when its group means differ
    (infinite t) and dropped otherwise.
    """
    if not 0 < alpha <= 1:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    s = summarize(data)
    se = np.sqrt(s.var_scale * s.pooled_var)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, s.x_diff / se, np.sign(s.x_diff) * np.inf)
    t = np.where((se == 0) & (s.x_diff == 0), 0.0, t)
    pv = np.clip(2.0 * sps.t.sf(np.abs(t), s.dof), 0.0, 1.0)
    kept = np.flatnonzero(pv < alpha)
    return ScreeningResult(kept, t, pv, float(alpha))


def min_max_scale(train: LabeledMatrix, others: Sequence[LabeledMatrix] = ()):
    """Map each train column onto [0, 1] and apply the same map to ``others``.

    Constant train columns map to 0. Returns ``(train_scaled, others_scaled,
    mins, maxs)``.
    """
    lo = train.values.min(axis=0)
    hi = train.values.max(axis=0)

    def apply(d: LabeledMatrix) -> LabeledMatrix:
        if d.p != train.p:
            raise ValidationError(f"expected {train.p} features, got {d.p}")
        return LabeledMatrix(_scale_rows(d.values, lo, hi), d.labels, d.feature_names)

    return apply(train), [apply(d) for d in others], lo, hi


def _scale_rows(x, lo, hi):
    span = hi - lo
    out = np.zeros_like(x)
    nz = span > 0
    out[..., nz] = (x[..., nz] - lo[nz]) / span[nz]
    return out


@dataclass(frozen=True)
class LoocvResult:
    rate: float
    predictions: np.ndarray  # 0 marks a skipped fold
    skipped: tuple[int, ...]


def _fit(method: str, data: LabeledMatrix, config: SolverConfig):
    if method == "MVA":
        return fit_mva(data, config)
    if method == "NB":
        return fit_naive_bayes(data)
    raise DomainError(f"unknown method {method!r}; expected MVA or NB")


def _loocv_fold(args) -> int:
    data, i, method, config, alpha, scale, global_keep = args
    rows = np.r_[0:i, i + 1 : data.n]
    train = data.subset(rows=rows)
    x = data.values[i]
    keep = global_keep
    if keep is None and alpha is not None:
        keep = t_test_screen(train, alpha).kept_indices
    if keep is not None:
        if keep.size == 0:
            n1, n2 = train.class_counts
            return 1 if -math.log(n2 / n1) >= 0 else 2
        train = train.subset(cols=keep)
        x = x[keep]
    if scale:
        lo = train.values.min(axis=0)
        hi = train.values.max(axis=0)
        train = LabeledMatrix(_scale_rows(train.values, lo, hi), train.labels)
        x = _scale_rows(x, lo, hi)
    return int(predict(_fit(method, train, config), x))


def loocv(
    data: LabeledMatrix,
    method: str = "MVA",
    config: Optional[SolverConfig] = None,
    alpha: Optional[float] = 0.2,
    scale: bool = False,
    screen_globally: bool = False,
    n_jobs: int = 1,
) -> LoocvResult:
    """Leave-one-out misclassification rate.

    Screening (skipped when ``alpha`` is None) and scaling are refit on each
    training fold unless ``screen_globally`` screens once on the full data.
    Folds whose training part has fewer than two samples in a class are
    skipped with a warning. When no feature survives screening the fold is
    labeled by the class proportions alone.
    """
    method = method.upper()
    if method not in ("MVA", "NB"):
        raise DomainError(f"unknown method {method!r}; expected MVA or NB")
    config = config or SolverConfig()
    global_keep = None
    if screen_globally and alpha is not None:
        global_keep = t_test_screen(data, alpha).kept_indices
    n1, n2 = data.class_counts
    jobs, skipped = [], []
    for i in range(data.n):
        left = (n1 - (data.labels[i] == 1), n2 - (data.labels[i] == 2))
        if min(left) < 2:
            log.warning("fold %d skipped: training part has a class with fewer than 2 samples", i)
            skipped.append(i)
            continue
        jobs.append((data, i, method, config, alpha, scale, global_keep))
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            labels = list(pool.map(_loocv_fold, jobs))
    else:
        labels = [_loocv_fold(j) for j in jobs]
    preds = np.zeros(data.n, dtype=np.int64)
    done = np.array([j[1] for j in jobs], dtype=np.intp)
    preds[done] = labels
    if done.size == 0:
        raise ValidationError("no LOOCV fold could be fit")
    rate = float(np.mean(preds[done] != data.labels[done]))
    return LoocvResult(rate, preds, tuple(skipped))
