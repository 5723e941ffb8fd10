"""Labeled two-class data and per-feature sufficient statistics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from mvalda.errors import ValidationError

MIN_CLASS_SIZE = 2


@dataclass(frozen=True)
class LabeledMatrix:
    """An ``n x p`` matrix of feature values with class labels in ``{1, 2}``.

    Validation happens on construction; the stored arrays are read-only copies.
    """

    values: np.ndarray
    labels: np.ndarray
    feature_names: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        labels = np.array(self.labels)
        if values.ndim != 2:
            raise ValidationError(f"values must be a 2-D matrix, got {values.ndim}-D")
        if labels.ndim != 1 or labels.shape[0] != values.shape[0]:
            raise ValidationError(
                f"labels must have one entry per row ({values.shape[0]}), got shape {labels.shape}"
            )
        bad = ~np.isin(labels, (1, 2))
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise ValidationError(f"label at row {i} is {labels[i]!r}; labels must be 1 or 2")
        labels = labels.astype(np.int64)
        for k in (1, 2):
            n_k = int(np.sum(labels == k))
            if n_k < MIN_CLASS_SIZE:
                raise ValidationError(
                    f"class {k} has {n_k} sample(s); at least {MIN_CLASS_SIZE} are required"
                )
        finite = np.isfinite(values)
        if not finite.all():
            cols = np.flatnonzero(~finite.all(axis=0))
            raise ValidationError(f"non-finite value in feature {int(cols[0])}")
        names = self.feature_names
        if names is not None:
            names = tuple(str(s) for s in names)
            if len(names) != values.shape[1]:
                raise ValidationError(
                    f"{len(names)} feature names given for {values.shape[1]} features"
                )
        values.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def class_counts(self) -> tuple[int, int]:
        return int(np.sum(self.labels == 1)), int(np.sum(self.labels == 2))

    def subset(self, rows=None, cols=None) -> "LabeledMatrix":
        """Row and/or column selection, revalidated."""
        values, labels, names = self.values, self.labels, self.feature_names
        if rows is not None:
            values, labels = values[rows], labels[rows]
        if cols is not None:
            cols = np.asarray(cols, dtype=np.intp)
            values = values[:, cols]
            if names is not None:
                names = tuple(names[c] for c in cols)
        return LabeledMatrix(values, labels, names)


@dataclass(frozen=True)
class FeatureSummary:
    """Per-feature group means, their difference and the pooled variance.

    ``dof`` is ``n1 + n2 - 2`` and ``var_scale`` is ``(n1 + n2) / (n1 * n2)``,
    the factor relating the variance of ``x_diff`` to the feature variance.
    """

    x_diff: np.ndarray
    pooled_var: np.ndarray
    mean_g1: np.ndarray
    mean_g2: np.ndarray
    n1: int
    n2: int
    dof: int = field(init=False)
    var_scale: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "dof", self.n1 + self.n2 - 2)
        object.__setattr__(self, "var_scale", (self.n1 + self.n2) / (self.n1 * self.n2))
        for name in ("x_diff", "pooled_var", "mean_g1", "mean_g2"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def p(self) -> int:
        return self.x_diff.shape[0]


def summarize(data: LabeledMatrix) -> FeatureSummary:
    """Compute group means, mean difference and pooled variance per feature.

    The pooled variance uses divisor ``n1 + n2 - 2``.

    >>> d = LabeledMatrix([[1.0], [3.0], [0.0], [2.0]], [1, 1, 2, 2])
    >>> s = summarize(d)
    >>> float(s.x_diff[0]), float(s.pooled_var[0]), s.dof, s.var_scale
    (1.0, 2.0, 2, 1.0)
    """
    g1 = data.values[data.labels == 1]
    g2 = data.values[data.labels == 2]
    n1, n2 = g1.shape[0], g2.shape[0]
    m1 = g1.mean(axis=0)
    m2 = g2.mean(axis=0)
    ss = ((g1 - m1) ** 2).sum(axis=0) + ((g2 - m2) ** 2).sum(axis=0)
    return FeatureSummary(
        x_diff=m1 - m2,
        pooled_var=ss / (n1 + n2 - 2),
        mean_g1=m1,
        mean_g2=m2,
        n1=n1,
        n2=n2,
    )

