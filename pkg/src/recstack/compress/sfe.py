"""Greedy relevance-over-redundancy feature filter.

Each step scores every unselected column ``f`` by

    utility(f) = relevance(f) / (1 + redundancy(f))

where relevance is ``|pearson(f, y)|`` (labels as integer codes) and
redundancy is the largest ``|pearson(f, g)|`` over already selected ``g``.
The highest-utility column is added; ties go to the lowest index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..data import FeatureMatrix
from ..errors import EmptyMatrix


@dataclass(frozen=True)
class SfeConfig:
    """Stopping rule for :func:`sfe_select`.

    With neither field set, selection stops after ``ceil(sqrt(d))`` columns.
    With only ``min_utility`` set there is no count cap.  Selection always
    stops once the best remaining utility is non-positive.
    """

    max_features: Optional[int] = None
    min_utility: Optional[float] = None

    def __post_init__(self):
        if self.max_features is not None and self.max_features < 1:
            raise ValueError(f"max_features must be >= 1, got {self.max_features}")

    def budget(self, d: int) -> int:
        if self.max_features is not None:
            return min(self.max_features, d)
        if self.min_utility is not None:
            return d
        return min(d, math.ceil(math.sqrt(d)))


@dataclass(frozen=True)
class SfeTrace:
    selected: tuple
    utilities: tuple


def _unit_columns(X):
    Xc = X - X.mean(axis=0)
    norms = np.sqrt((Xc * Xc).sum(axis=0))
    safe = np.where(norms > 0, norms, 1.0)
    return Xc / safe, norms > 0


def relevance(X, y) -> np.ndarray:
    """Absolute Pearson correlation of each column with ``y``; 0 for constant columns."""
    U, live = _unit_columns(np.asarray(X, dtype=np.float64))
    yc = np.asarray(y, dtype=np.float64)
    yc = yc - yc.mean()
    ynorm = math.sqrt(float(yc @ yc))
    if ynorm == 0:
        return np.zeros(U.shape[1])
    rel = np.abs(U.T @ yc) / ynorm
    return np.where(live, rel, 0.0)


def sfe_trace(X, y, cfg: SfeConfig = SfeConfig()) -> SfeTrace:
    X = np.asarray(X.values if isinstance(X, FeatureMatrix) else X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] == 0 or X.shape[0] == 0:
        raise EmptyMatrix("SFE needs a non-empty matrix")
    d = X.shape[1]
    U, live = _unit_columns(X)
    rel = relevance(X, y)
    red = np.zeros(d)
    available = np.ones(d, dtype=bool)
    selected, utilities = [], []

    for _ in range(cfg.budget(d)):
        utility = np.where(available, rel / (1.0 + red), -np.inf)
        best = int(np.argmax(utility))
        u = float(utility[best])
        if selected and (u <= 0 or (cfg.min_utility is not None and u < cfg.min_utility)):
            break
        selected.append(best)
        utilities.append(u)
        available[best] = False
        if live[best]:
            red = np.maximum(red, np.abs(U.T @ U[:, best]))
    return SfeTrace(tuple(selected), tuple(utilities))


def sfe_select(X_train: FeatureMatrix, y, cfg: SfeConfig = SfeConfig(), X_test: Optional[FeatureMatrix] = None):
    """Select columns greedily on the training matrix and apply them to both sides.

    Returns ``(selected_indices, (train, test))``; ``test`` is ``None`` when no
    test matrix is given.  Indices are in selection order while the returned
    matrices keep the selected columns in that same order.
    """
    trace = sfe_trace(X_train, y, cfg)
    idx = list(trace.selected)
    test = X_test.take_columns(idx) if X_test is not None else None
    return trace.selected, (X_train.take_columns(idx), test)
