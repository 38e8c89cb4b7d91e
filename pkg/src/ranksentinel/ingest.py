"""Loading, validation, and preprocessing of expression matrices.

Input is a delimited text matrix (header row = sample ids, first column =
feature ids, cells = non-negative numbers) plus a two-column label file
assigning every sample to ``case`` or ``control``. All transformations
are pure: they return new matrices and never mutate their input.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError

LABELS = ("case", "control")


@dataclass(frozen=True)
class ExpressionMatrix:
    """Features-by-samples numeric matrix with a binary group label per sample."""

    feature_ids: tuple[str, ...]
    sample_ids: tuple[str, ...]
    values: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "feature_ids", tuple(self.feature_ids))
        object.__setattr__(self, "sample_ids", tuple(self.sample_ids))
        object.__setattr__(self, "labels", tuple(self.labels))
        _check_unique(self.feature_ids, "feature id")
        _check_unique(self.sample_ids, "sample id")
        if values.ndim != 2 or values.shape != (len(self.feature_ids), len(self.sample_ids)):
            raise ValidationError(
                f"values shape {values.shape} does not match "
                f"{len(self.feature_ids)} features x {len(self.sample_ids)} samples"
            )
        if not np.all(np.isfinite(values)):
            raise ValidationError("matrix contains non-finite entries")
        if np.any(values < 0):
            raise ValidationError("matrix contains negative entries")
        if len(self.labels) != len(self.sample_ids):
            raise ValidationError("need exactly one label per sample")
        bad = sorted(set(self.labels) - set(LABELS))
        if bad:
            raise ValidationError(f"unknown group labels: {bad} (expected one of {LABELS})")
        for lab in LABELS:
            if lab not in self.labels:
                raise ValidationError(f"group '{lab}' has zero samples")

    @property
    def n_features(self) -> int:
        return len(self.feature_ids)

    @property
    def n_samples(self) -> int:
        return len(self.sample_ids)

    def group_indices(self, label: str) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.labels) == label)


def _check_unique(ids, kind: str) -> None:
    seen = set()
    for x in ids:
        if x in seen:
            raise ValidationError(f"duplicate {kind}: {x!r}")
        seen.add(x)


def _sniff_delimiter(first_line: str, path) -> str:
    if "\t" in first_line:
        return "\t"
    if "," in first_line:
        return ","
    raise ValidationError(f"{path}: could not detect a tab or comma delimiter in the first line")


def _read_rows(path, delimiter: str | None) -> tuple[list[list[str]], str]:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"file not found: {path}")
    text = path.read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValidationError(f"{path}: file is empty")
    delim = delimiter or _sniff_delimiter(lines[0], path)
    return list(csv.reader(lines, delimiter=delim)), delim


def load_matrix(path, label_path, delimiter: str | None = None) -> ExpressionMatrix:
    """Read a delimited matrix file and its sample-label file.

    The delimiter is auto-detected from the first line (tab beats comma)
    unless given explicitly; the two files are sniffed independently.
    Row and column order are preserved from the matrix file.
    """
    rows, _ = _read_rows(path, delimiter)
    header = rows[0]
    if len(header) < 2:
        raise ValidationError(f"{path}: header must name at least one sample")
    sample_ids = [h.strip() for h in header[1:]]
    feature_ids: list[str] = []
    values = np.empty((len(rows) - 1, len(sample_ids)), dtype=np.float64)
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(sample_ids) + 1:
            raise ValidationError(
                f"{path}: line {r} has {len(row)} fields, expected {len(sample_ids) + 1}"
            )
        feature_ids.append(row[0].strip())
        for c, cell in enumerate(row[1:]):
            try:
                values[r - 2, c] = float(cell)
            except ValueError:
                raise ValidationError(
                    f"{path}: non-numeric cell {cell!r} at line {r}, sample {sample_ids[c]!r}"
                ) from None

    labels_by_sample = load_labels(label_path, delimiter)
    missing = [s for s in sample_ids if s not in labels_by_sample]
    if missing:
        raise ValidationError(f"samples missing from label file: {missing}")
    extra = sorted(set(labels_by_sample) - set(sample_ids))
    if extra:
        raise ValidationError(f"label file lists samples absent from the matrix: {extra}")
    labels = tuple(labels_by_sample[s] for s in sample_ids)
    return ExpressionMatrix(tuple(feature_ids), tuple(sample_ids), values, labels)


def load_labels(path, delimiter: str | None = None) -> dict[str, str]:
    """Parse ``sample_id,label`` rows; a header row is skipped if its second
    field is not a recognized label."""
    rows, _ = _read_rows(path, delimiter)
    start = 0
    first = rows[0]
    if len(first) >= 2 and first[1].strip().lower() not in LABELS:
        start = 1
        if len(rows) == 1:
            raise ValidationError(f"{path}: no label rows found")
    out: dict[str, str] = {}
    for r, row in enumerate(rows[start:], start=start + 1):
        if len(row) < 2:
            raise ValidationError(f"{path}: line {r} needs two fields (sample_id, label)")
        sample, label = row[0].strip(), row[1].strip().lower()
        if label not in LABELS:
            raise ValidationError(f"{path}: line {r}: unknown label {row[1]!r}")
        if sample in out:
            raise ValidationError(f"{path}: duplicate sample id {sample!r}")
        out[sample] = label
    return out


def filter_low_expressed(x: ExpressionMatrix) -> ExpressionMatrix:
    """Drop features whose value is exactly zero in strictly more than half
    of the samples. Survivor order is preserved; idempotent."""
    zero_counts = np.sum(x.values == 0.0, axis=1)
    keep = zero_counts <= x.n_samples / 2.0
    if not np.any(keep):
        raise ValidationError("low-expression filter removed every feature")
    kept_ids = tuple(f for f, k in zip(x.feature_ids, keep) if k)
    return ExpressionMatrix(kept_ids, x.sample_ids, x.values[keep], x.labels)


def drop_excluded(x: ExpressionMatrix, excluded) -> ExpressionMatrix:
    """Remove the features named in ``excluded`` (an iterable of ids or a
    path to a one-id-per-line file). Unknown ids are ignored."""
    if isinstance(excluded, (str, Path)):
        p = Path(excluded)
        if not p.exists():
            raise ValidationError(f"exclusion file not found: {p}")
        excluded = [ln.strip() for ln in p.read_text(encoding="utf-8").splitlines() if ln.strip()]
    drop = set(excluded)
    keep = np.array([f not in drop for f in x.feature_ids], dtype=bool)
    if not np.any(keep):
        raise ValidationError("exclusion list removed every feature")
    kept_ids = tuple(f for f, k in zip(x.feature_ids, keep) if k)
    return ExpressionMatrix(kept_ids, x.sample_ids, x.values[keep], x.labels)


def cpm_normalize(x: ExpressionMatrix) -> ExpressionMatrix:
    """Rescale every sample column to counts per million."""
    col_sums = x.values.sum(axis=0)
    zero = np.flatnonzero(col_sums == 0.0)
    if zero.size:
        raise ValidationError(
            f"cannot normalize: zero column sum for sample(s) {[x.sample_ids[i] for i in zero]}"
        )
    values = x.values / col_sums * 1e6
    return ExpressionMatrix(x.feature_ids, x.sample_ids, values, x.labels)


def balance_groups(x: ExpressionMatrix, ratio: int = 2, seed: int | None = None) -> ExpressionMatrix:
    """Keep all controls plus a seeded uniform subsample of cases of size
    ``ratio`` times the control count. Column order of the retained
    samples is preserved, so the result is reproducible bit for bit."""
    if ratio < 1:
        raise ValidationError(f"ratio must be a positive integer, got {ratio}")
    if seed is None:
        raise ValidationError("balance_groups is randomized; a seed is required")
    case_idx = x.group_indices("case")
    control_idx = x.group_indices("control")
    want = ratio * control_idx.size
    if case_idx.size < want:
        raise ValidationError(
            f"insufficient cases: need {want} (= {ratio} x {control_idx.size} controls), "
            f"have {case_idx.size}"
        )
    rng = np.random.default_rng(seed)
    chosen = rng.choice(case_idx, size=want, replace=False)
    keep = np.sort(np.concatenate([chosen, control_idx]))
    return ExpressionMatrix(
        x.feature_ids,
        tuple(x.sample_ids[i] for i in keep),
        x.values[:, keep],
        tuple(x.labels[i] for i in keep),
    )


def write_matrix(x: ExpressionMatrix, matrix_path, label_path, delimiter: str = "\t") -> None:
    """Write a matrix and its labels back out in the load_matrix formats."""
    matrix_path, label_path = Path(matrix_path), Path(label_path)
    with matrix_path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(delimiter.join(["feature_id", *x.sample_ids]) + "\n")
        for i, fid in enumerate(x.feature_ids):
            cells = (format(v, ".10g") for v in x.values[i])
            fh.write(delimiter.join([fid, *cells]) + "\n")
    with label_path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(delimiter.join(["sample_id", "label"]) + "\n")
        for sid, lab in zip(x.sample_ids, x.labels):
            fh.write(delimiter.join([sid, lab]) + "\n")
