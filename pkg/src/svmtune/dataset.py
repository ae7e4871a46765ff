"""Dataset loading, validation, standardization and stratified k-fold splits.

Feature matrices are dense float64 arrays; labels are -1/+1 integers. All
randomness is driven by numpy's PCG64 generator so that a (data, k, seed)
triple always produces the same fold assignment.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError

__all__ = [
    "Sample",
    "Dataset",
    "FoldAssignment",
    "FeatureStats",
    "parse_libsvm",
    "parse_csv",
    "dump_libsvm",
    "standardize",
    "kfold_split",
]


@dataclass(frozen=True)
class Sample:
    """One labelled feature vector; label is exactly -1 or +1."""

    features: np.ndarray
    label: int

    def __post_init__(self) -> None:
        if self.label not in (-1, 1):
            raise DataError(f"label must be -1 or +1, got {self.label}")
        if not np.all(np.isfinite(self.features)):
            raise DataError("sample features must be finite")


@dataclass(frozen=True)
class Dataset:
    """Immutable collection of samples with consistent dimensionality.

    Invariants checked on construction: a rectangular finite feature matrix,
    labels restricted to {-1, +1}, and at least one sample of each class.
    Row order is ingestion order and never changes.
    """

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        features = np.ascontiguousarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if features.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        if labels.ndim != 1 or labels.shape[0] != features.shape[0]:
            raise DataError("labels must align with feature rows")
        if features.shape[0] == 0:
            raise DataError("dataset is empty")
        if features.shape[1] == 0:
            raise DataError("dataset has no feature columns")
        if not np.all(np.isfinite(features)):
            raise DataError("features contain NaN or infinity")
        if not np.all(np.isin(labels, (-1, 1))):
            raise DataError("labels must be -1 or +1")
        if not (np.any(labels == 1) and np.any(labels == -1)):
            raise DataError("only one class present; need samples of both classes")
        features.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def sample(self, i: int) -> Sample:
        return Sample(self.features[i], int(self.labels[i]))

    def class_counts(self) -> tuple[int, int]:
        """(count of -1 labels, count of +1 labels)."""
        pos = int(np.count_nonzero(self.labels == 1))
        return self.n_samples - pos, pos


@dataclass(frozen=True)
class FoldAssignment:
    """Per-sample fold indices for k-fold cross-validation."""

    k: int
    fold_of: np.ndarray

    def __post_init__(self) -> None:
        if self.k < 2:
            raise DataError(f"k must be >= 2, got {self.k}")
        fold_of = np.asarray(self.fold_of, dtype=np.int64)
        if fold_of.ndim != 1 or fold_of.shape[0] == 0:
            raise DataError("fold_of must be a non-empty 1-D array")
        if fold_of.min() < 0 or fold_of.max() >= self.k:
            raise DataError("fold indices must lie in [0, k)")
        fold_of.flags.writeable = False
        object.__setattr__(self, "fold_of", fold_of)

    @property
    def n_samples(self) -> int:
        return self.fold_of.shape[0]

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != fold)


@dataclass(frozen=True)
class FeatureStats:
    """Per-column statistics that reproduce a standardization transform.

    ``scale`` holds the divisor actually applied: the population standard
    deviation, or 1.0 for constant columns (which are only centered).
    """

    mean: np.ndarray
    scale: np.ndarray

    def apply(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, dtype=np.float64) - self.mean) / self.scale


def _parse_label(token: str, where: str) -> int:
    """Map a raw label token to -1/+1; 0 becomes -1."""
    try:
        value = float(token)
    except ValueError:
        raise DataError(f"{where}: label {token!r} is not a number") from None
    if value not in (-1.0, 0.0, 1.0):
        raise DataError(f"{where}: label must be -1, 0 or +1, got {token!r}")
    return 1 if value == 1.0 else -1


def _as_text(data: str | bytes) -> str:
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


def parse_libsvm(text: str | bytes) -> Dataset:
    """Parse sparse libsvm text: ``<label> <index>:<value> ...`` per line.

    Indices are 1-based and must be strictly increasing within a line; the
    dataset width is the maximum index seen anywhere in the input. Labels may
    be -1, 0 or +1, with 0 mapped to -1.
    """
    rows: list[dict[int, float]] = []
    labels: list[int] = []
    n_features = 0
    for lineno, line in enumerate(_as_text(text).splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        tokens = line.split()
        labels.append(_parse_label(tokens[0], f"line {lineno}"))
        row: dict[int, float] = {}
        prev_index = 0
        for token in tokens[1:]:
            index_str, sep, value_str = token.partition(":")
            if not sep:
                raise DataError(f"line {lineno}: expected index:value, got {token!r}")
            try:
                index = int(index_str)
                value = float(value_str)
            except ValueError:
                raise DataError(
                    f"line {lineno}: malformed feature entry {token!r}"
                ) from None
            if index < 1:
                raise DataError(f"line {lineno}: feature index {index} is not 1-based")
            if index <= prev_index:
                raise DataError(
                    f"line {lineno}: feature indices must be strictly increasing"
                )
            if not math.isfinite(value):
                raise DataError(f"line {lineno}: non-finite feature value {value_str!r}")
            row[index] = value
            prev_index = index
        n_features = max(n_features, prev_index)
        rows.append(row)

    if not rows:
        raise DataError("empty input: no samples found")
    if n_features == 0:
        raise DataError("no feature entries found in input")

    features = np.zeros((len(rows), n_features))
    for i, row in enumerate(rows):
        for index, value in row.items():
            features[i, index - 1] = value
    return Dataset(features, np.array(labels))


def dump_libsvm(d: Dataset) -> str:
    """Serialize a dataset to libsvm text, inverse of :func:`parse_libsvm`.

    Zero values are omitted, except that the last column is written
    explicitly on the first line when no sample has a nonzero value there;
    otherwise re-parsing would infer a narrower feature matrix.
    """
    last = d.n_features
    force_last_on_first = not np.any(d.features[:, last - 1] != 0.0)
    lines = []
    for i in range(d.n_samples):
        parts = ["+1" if d.labels[i] == 1 else "-1"]
        row = d.features[i]
        for j in np.flatnonzero(row != 0.0):
            parts.append(f"{j + 1}:{float(row[j])!r}")
        if i == 0 and force_last_on_first:
            parts.append(f"{last}:0.0")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def parse_csv(text: str | bytes, label_column: str) -> Dataset:
    """Parse CSV with a mandatory header; feature columns keep header order.

    Labels may be {-1, +1} or {0, 1}, with 0 mapped to -1. Error messages
    name the offending data row (1-based, header excluded) and column.
    """
    reader = csv.reader(io.StringIO(_as_text(text)))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty input: missing header row") from None
    header = [name.strip() for name in header]
    if label_column not in header:
        raise DataError(f"unknown label column {label_column!r}")
    label_idx = header.index(label_column)
    feature_names = [name for i, name in enumerate(header) if i != label_idx]
    if not feature_names:
        raise DataError("no feature columns besides the label column")

    features: list[list[float]] = []
    labels: list[int] = []
    for rowno, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise DataError(
                f"row {rowno}: expected {len(header)} columns, got {len(row)}"
            )
        labels.append(_parse_label(row[label_idx].strip(), f"row {rowno}"))
        values = []
        for i, cell in enumerate(row):
            if i == label_idx:
                continue
            try:
                value = float(cell)
            except ValueError:
                raise DataError(
                    f"row {rowno}, column {header[i]}: non-numeric value {cell!r}"
                ) from None
            if not math.isfinite(value):
                raise DataError(
                    f"row {rowno}, column {header[i]}: non-finite value {cell!r}"
                )
            values.append(value)
        features.append(values)

    if not features:
        raise DataError("empty input: no data rows found")
    return Dataset(np.array(features), np.array(labels))


def standardize(d: Dataset) -> tuple[Dataset, FeatureStats]:
    """Center each column and divide by its population standard deviation.

    Constant columns are centered only (divisor 1.0) so they map to exact
    zeros. Returns the transformed dataset and the stats that reproduce the
    transform on new data.
    """
    features = d.features
    constant = np.all(features == features[0], axis=0)
    mean = np.where(constant, features[0], features.mean(axis=0))
    std = np.sqrt(np.mean((features - mean) ** 2, axis=0))
    scale = np.where(std > 0.0, std, 1.0)
    transformed = (features - mean) / scale
    return Dataset(transformed, d.labels), FeatureStats(mean=mean, scale=scale)


def kfold_split(d: Dataset, k: int, seed: int) -> FoldAssignment:
    """Deterministic stratified k-fold assignment.

    Within each class, sample indices are shuffled by PCG64(seed) and dealt
    round-robin to folds; the dealing position carries over between classes
    so overall fold sizes differ by at most one.
    """
    if k < 2:
        raise DataError(f"k must be >= 2, got {k}")
    neg, pos = d.class_counts()
    smallest = min(neg, pos)
    if k > smallest:
        raise DataError(
            f"k={k} exceeds the smaller class count ({smallest}); "
            "every fold must be able to hold both classes"
        )
    rng = np.random.Generator(np.random.PCG64(seed))
    fold_of = np.empty(d.n_samples, dtype=np.int64)
    position = 0
    for cls in (-1, 1):
        indices = np.flatnonzero(d.labels == cls)
        indices = rng.permutation(indices)
        for offset, sample_idx in enumerate(indices):
            fold_of[sample_idx] = (position + offset) % k
        position = (position + len(indices)) % k
    return FoldAssignment(k=k, fold_of=fold_of)
