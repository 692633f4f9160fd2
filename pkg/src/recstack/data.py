"""Dataset ingestion, one-hot encoding and stratified fold planning."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    ClassTooSmall,
    DatasetError,
    MissingLabelColumn,
    SingleClassDataset,
    UnparseableCell,
)


class Task(str, Enum):
    BINARY = "binary"
    MULTICLASS = "multiclass"

    @classmethod
    def for_class_count(cls, class_count: int) -> "Task":
        return cls.BINARY if class_count == 2 else cls.MULTICLASS


@dataclass(frozen=True)
class ColumnMeta:
    """Name and provenance of a single feature column.

    ``origin`` is one of ``"original"``, ``"oof"`` or ``"compressed"``.  OOF
    columns carry the producing model and class index; compressed columns
    carry the level and the compression method that produced them.
    """

    name: str
    origin: str = "original"
    model_id: Optional[str] = None
    class_index: Optional[int] = None
    level: Optional[int] = None
    method: Optional[str] = None

    @classmethod
    def oof(cls, model_id: str, class_index: int, level: int) -> "ColumnMeta":
        return cls(
            name=f"L{level}:{model_id}:p{class_index}",
            origin="oof",
            model_id=model_id,
            class_index=class_index,
            level=level,
        )

    @classmethod
    def compressed(cls, index: int, level: int, method: str) -> "ColumnMeta":
        return cls(name=f"L{level}:{method}:{index}", origin="compressed", level=level, method=method)


@dataclass(frozen=True)
class FeatureMatrix:
    """Dense, finite feature table with per-column provenance."""

    values: np.ndarray
    columns: tuple = field(default=())

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"FeatureMatrix needs a 2-D array, got shape {values.shape}")
        columns = tuple(self.columns) or tuple(ColumnMeta(f"x{i}") for i in range(values.shape[1]))
        if len(columns) != values.shape[1]:
            raise ValueError(f"{len(columns)} column descriptors for {values.shape[1]} columns")
        if not np.all(np.isfinite(values)):
            raise ValueError("FeatureMatrix values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "columns", columns)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def names(self) -> list:
        return [c.name for c in self.columns]

    def take_rows(self, index) -> "FeatureMatrix":
        return FeatureMatrix(self.values[index], self.columns)

    def take_columns(self, index: Sequence[int]) -> "FeatureMatrix":
        index = list(index)
        return FeatureMatrix(self.values[:, index], tuple(self.columns[i] for i in index))

    @staticmethod
    def hstack(parts: Iterable["FeatureMatrix"]) -> "FeatureMatrix":
        parts = list(parts)
        rows = {p.rows for p in parts}
        if len(rows) != 1:
            raise ValueError(f"cannot stack matrices with row counts {sorted(rows)}")
        values = np.hstack([p.values for p in parts])
        columns = tuple(c for p in parts for c in p.columns)
        return FeatureMatrix(values, columns)


def as_array(X) -> np.ndarray:
    if isinstance(X, FeatureMatrix):
        return X.values
    return np.asarray(X, dtype=np.float64)


@dataclass(frozen=True)
class Dataset:
    features: FeatureMatrix
    labels: np.ndarray
    class_count: int
    task: Task
    class_names: tuple = ()

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or not np.issubdtype(labels.dtype, np.integer):
            raise DatasetError("labels must be a 1-D integer vector")
        if labels.shape[0] != self.features.rows:
            raise DatasetError(
                f"{labels.shape[0]} labels for {self.features.rows} feature rows"
            )
        present = np.unique(labels)
        if not np.array_equal(present, np.arange(self.class_count)):
            raise DatasetError(
                f"labels must cover 0..{self.class_count - 1} exactly, got {present.tolist()}"
            )
        if (self.task is Task.BINARY) != (self.class_count == 2):
            raise DatasetError(f"task {self.task.value} inconsistent with {self.class_count} classes")
        labels = labels.astype(np.int64)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_arrays(cls, X, y, names: Optional[Sequence[str]] = None) -> "Dataset":
        """Build a dataset from a numeric matrix and arbitrary labels."""
        X = np.asarray(X, dtype=np.float64)
        names = list(names) if names is not None else [f"x{i}" for i in range(X.shape[1])]
        classes, codes = np.unique(np.asarray(y), return_inverse=True)
        if len(classes) < 2:
            raise SingleClassDataset("dataset needs at least two distinct labels")
        features = FeatureMatrix(X, tuple(ColumnMeta(n) for n in names))
        return cls(
            features=features,
            labels=codes.astype(np.int64),
            class_count=len(classes),
            task=Task.for_class_count(len(classes)),
            class_names=tuple(str(c) for c in classes),
        )


def _parse_float(text: str) -> Optional[float]:
    try:
        return float(text)
    except ValueError:
        return None


def _label_sort_key(values):
    numeric = [_parse_float(v) for v in values]
    if all(v is not None for v in numeric):
        return sorted(values, key=lambda v: (float(v), v))
    return sorted(values)


def load_csv(
    path,
    label_column: str,
    categorical_columns: Optional[Sequence[str]] = None,
) -> Dataset:
    """Read a headed CSV file into a fully numeric :class:`Dataset`.

    A feature column is treated as categorical when it is listed in
    ``categorical_columns`` or when any of its cells fails numeric parsing.
    Categorical columns are expanded into one indicator column per distinct
    value, in sorted value order.  Labels are mapped to ``0..C-1`` by sorted
    distinct value (numerically when every label parses as a number).

    Empty cells and non-finite numbers are rejected rather than imputed.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path} is empty") from None
        rows = [r for r in reader if r]

    if label_column not in header:
        raise MissingLabelColumn(label_column)
    declared = set(categorical_columns or ())
    unknown = declared - set(header)
    if unknown:
        raise DatasetError(f"categorical columns not in header: {sorted(unknown)}")

    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise UnparseableCell(i, header[min(len(row), len(header) - 1)], ",".join(row))
        for j, cell in enumerate(row):
            if not cell.strip():
                raise UnparseableCell(i, header[j], cell)

    label_idx = header.index(label_column)
    raw_labels = [r[label_idx].strip() for r in rows]
    classes = _label_sort_key(set(raw_labels))
    if len(classes) < 2:
        raise SingleClassDataset(
            f"label column {label_column!r} has {len(classes)} distinct value(s)"
        )
    code_of = {c: k for k, c in enumerate(classes)}
    labels = np.array([code_of[v] for v in raw_labels], dtype=np.int64)

    blocks = []
    columns = []
    for j, name in enumerate(header):
        if j == label_idx:
            continue
        cells = [r[j].strip() for r in rows]
        parsed = [_parse_float(c) for c in cells]
        if name in declared or any(p is None for p in parsed):
            levels = sorted(set(cells))
            onehot = np.zeros((len(cells), len(levels)))
            pos = {v: k for k, v in enumerate(levels)}
            for i, c in enumerate(cells):
                onehot[i, pos[c]] = 1.0
            blocks.append(onehot)
            columns.extend(ColumnMeta(f"{name}={v}") for v in levels)
        else:
            for i, p in enumerate(parsed):
                if not math.isfinite(p):
                    raise UnparseableCell(i, name, cells[i])
            blocks.append(np.array(parsed, dtype=np.float64)[:, None])
            columns.append(ColumnMeta(name))

    values = np.hstack(blocks) if blocks else np.zeros((len(rows), 0))
    features = FeatureMatrix(values, tuple(columns))
    return Dataset(
        features=features,
        labels=labels,
        class_count=len(classes),
        task=Task.for_class_count(len(classes)),
        class_names=tuple(classes),
    )


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: np.ndarray

    def split(self, fold: int):
        """Return ``(train_index, test_index)`` for one fold."""
        test = np.flatnonzero(self.assignments == fold)
        train = np.flatnonzero(self.assignments != fold)
        return train, test

    def __iter__(self):
        for f in range(self.k):
            yield self.split(f)


def stratified_folds(labels, k: int, seed) -> FoldPlan:
    """Assign each row to one of ``k`` folds, stratified by class.

    Rows of each class are shuffled and dealt round-robin; the dealing offset
    carries over from class to class so fold sizes stay balanced overall.
    """
    labels = np.asarray(labels)
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    classes, counts = np.unique(labels, return_counts=True)
    for c, n in zip(classes, counts):
        if n < k:
            raise ClassTooSmall(int(c), int(n), k)

    rng = np.random.default_rng(seed)
    assignments = np.empty(labels.shape[0], dtype=np.int64)
    offset = 0
    for c in classes:
        members = rng.permutation(np.flatnonzero(labels == c))
        assignments[members] = (offset + np.arange(members.size)) % k
        offset = (offset + members.size) % k
    assignments.setflags(write=False)
    return FoldPlan(k=k, assignments=assignments)


def make_ring(n: int = 600, seed=7, noise: float = 0.15, n_noise_features: int = 2) -> Dataset:
    """Binary concentric-ring problem: inner disc versus surrounding annulus.

    Two informative coordinates plus ``n_noise_features`` standard normal
    distractors.  Not linearly separable, so linear learners sit near chance
    while trees and neighbours do well.
    """
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    rng.shuffle(y)
    radius = np.where(y == 0, 1.0, 2.0) + rng.normal(0.0, noise * 2.0, n)
    theta = rng.uniform(0.0, 2.0 * np.pi, n)
    X = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
    if n_noise_features:
        X = np.hstack([X, rng.normal(size=(n, n_noise_features))])
    names = ["u", "v"] + [f"noise{i}" for i in range(n_noise_features)]
    return Dataset.from_arrays(X, y, names)


def make_blobs(
    n: int = 300, n_classes: int = 3, n_features: int = 4, spread: float = 1.5, seed=0
) -> Dataset:
    """Isotropic Gaussian clusters with random centres, ``n`` rows split evenly."""
    rng = np.random.default_rng(seed)
    centres = rng.normal(0.0, spread, size=(n_classes, n_features))
    y = np.arange(n) % n_classes
    rng.shuffle(y)
    X = centres[y] + rng.normal(size=(n, n_features))
    return Dataset.from_arrays(X, y)
