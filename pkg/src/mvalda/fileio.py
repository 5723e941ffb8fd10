"""CSV ingestion, model files and report serialization.

Data CSV: a header row, first column ``label`` with values 1 or 2, remaining
columns numeric features, one row per sample.

Model file: plain text, one ``key: value`` pair per line, arrays as
space-separated decimals with 17 significant digits, starting with
``format_version: 1``.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from mvalda.classifier import FittedModel
from mvalda.errors import ValidationError
from mvalda.npmle import DiscreteMixing
from mvalda.stats import LabeledMatrix

FORMAT_VERSION = 1
LABEL_COLUMN = "label"


class CsvFormatError(ValidationError):
    pass


def fmt(x) -> str:
    return format(float(x), ".17g")


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_data_csv(path, require_labels: bool = True):
    """Parse a data CSV into ``(values, labels, feature_names)``.

    With ``require_labels=False`` a leading ``label`` column is optional and
    ``labels`` is ``None`` when absent.
    """
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        try:
            header = next(rows)
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file, a header row is required") from None
        header = [h.strip() for h in header]
        has_label = bool(header) and header[0] == LABEL_COLUMN
        if require_labels and not has_label:
            raise CsvFormatError(
                f"{path}: first column must be '{LABEL_COLUMN}', found {header[0] if header else ''!r}"
            )
        names = header[1:] if has_label else header
        if not names:
            raise CsvFormatError(f"{path}: no feature columns")
        width = len(header)
        labels, values = [], []
        for lineno, row in enumerate(rows, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise CsvFormatError(f"{path}: line {lineno}: expected {width} fields, got {len(row)}")
            try:
                nums = [float(c) for c in row]
            except ValueError as exc:
                raise CsvFormatError(f"{path}: line {lineno}: {exc}") from None
            if not all(np.isfinite(nums)):
                raise CsvFormatError(f"{path}: line {lineno}: non-finite value")
            if has_label:
                lab = nums[0]
                if lab not in (1.0, 2.0):
                    raise CsvFormatError(f"{path}: line {lineno}: label must be 1 or 2, got {row[0]!r}")
                labels.append(int(lab))
                nums = nums[1:]
            values.append(nums)
    if not values:
        raise CsvFormatError(f"{path}: no data rows")
    arr = np.array(values, dtype=float)
    return arr, (np.array(labels, dtype=np.int64) if has_label else None), names


def read_labeled_csv(path) -> LabeledMatrix:
    values, labels, names = read_data_csv(path)
    return LabeledMatrix(values, labels, names)


def labeled_to_csv(data: LabeledMatrix) -> str:
    names = data.feature_names or tuple(f"x{j + 1}" for j in range(data.p))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([LABEL_COLUMN, *names])
    for lab, row in zip(data.labels, data.values):
        w.writerow([int(lab), *(fmt(x) for x in row)])
    return buf.getvalue()


def rows_to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


# -- model files ------------------------------------------------------------

def _arr(a) -> str:
    return " ".join(fmt(x) for x in np.asarray(a, dtype=float))


def dumps_model(model: FittedModel) -> str:
    p, n1, n2 = model.dims
    lines = [
        f"format_version: {FORMAT_VERSION}",
        f"method_tag: {model.method_tag}",
        f"p: {p}",
        f"n1: {n1}",
        f"n2: {n2}",
        f"intercept: {fmt(model.intercept)}",
        f"log_prior_odds: {fmt(model.log_prior_odds)}",
        f"coefficients: {_arr(model.coefficients)}",
        f"mu_hat: {_arr(model.mu_hat)}",
        f"sigma2_hat: {_arr(model.sigma2_hat)}",
    ]
    for key, mix in (("variance_mixing", model.f_hat), ("mean_mixing", model.g_hat)):
        if mix is None:
            continue
        lines.append(f"{key}_support: {_arr(mix.support)}")
        lines.append(f"{key}_weights: {_arr(mix.weights)}")
        if mix.objective is not None:
            lines.append(f"{key}_objective: {fmt(mix.objective)}")
        if mix.iters is not None:
            lines.append(f"{key}_iters: {mix.iters}")
    return "\n".join(lines) + "\n"


def loads_model(text: str) -> FittedModel:
    fields = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise ValidationError(f"model file line {lineno}: expected 'key: value'")
        fields[key.strip()] = value.strip()
    version = fields.get("format_version")
    if version != str(FORMAT_VERSION):
        raise ValidationError(f"unsupported model format_version {version!r}")

    def arr(key):
        if key not in fields:
            raise ValidationError(f"model file is missing '{key}'")
        try:
            return np.array([float(t) for t in fields[key].split()], dtype=float)
        except ValueError:
            raise ValidationError(f"model file field '{key}' is not a list of numbers") from None

    def mixing(prefix) -> Optional[DiscreteMixing]:
        if f"{prefix}_support" not in fields:
            return None
        obj = fields.get(f"{prefix}_objective")
        iters = fields.get(f"{prefix}_iters")
        return DiscreteMixing(
            arr(f"{prefix}_support"),
            arr(f"{prefix}_weights"),
            None if obj is None else float(obj),
            None if iters is None else int(iters),
        )

    try:
        p = int(fields["p"])
        model = FittedModel(
            coefficients=arr("coefficients"),
            intercept=float(fields["intercept"]),
            log_prior_odds=float(fields["log_prior_odds"]),
            mu_hat=arr("mu_hat"),
            sigma2_hat=arr("sigma2_hat"),
            method_tag=fields["method_tag"],
            dims=(p, int(fields["n1"]), int(fields["n2"])),
            f_hat=mixing("variance_mixing"),
            g_hat=mixing("mean_mixing"),
        )
    except KeyError as exc:
        raise ValidationError(f"model file is missing {exc}") from None
    if model.coefficients.shape != (p,):
        raise ValidationError(f"model declares p={p} but has {model.coefficients.size} coefficients")
    return model


def save_model(model: FittedModel, path) -> None:
    atomic_write_text(path, dumps_model(model))


def load_model(path) -> FittedModel:
    return loads_model(Path(path).read_text())
