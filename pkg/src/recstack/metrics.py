"""Classification metrics for reporting and for pruning scores."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.stats import rankdata

from .errors import EmptyInput, LengthMismatch, SingleClassPresent

LOG_LOSS_EPS = 1e-15


@dataclass(frozen=True)
class MetricsRecord:
    accuracy: float
    f1_weighted: float
    precision_weighted: float
    recall_weighted: float
    log_loss: float
    roc_auc: Optional[float] = None

    def as_dict(self) -> dict:
        return asdict(self)


def _pair(y_true, y_pred):
    y_true = np.asarray(y_true, dtype=np.int64).ravel()
    y_pred = np.asarray(y_pred, dtype=np.int64).ravel()
    if y_true.shape != y_pred.shape:
        raise LengthMismatch(f"{y_true.size} true labels vs {y_pred.size} predictions")
    if y_true.size == 0:
        raise EmptyInput("metrics need at least one sample")
    return y_true, y_pred


def accuracy(y_true, y_pred) -> float:
    y_true, y_pred = _pair(y_true, y_pred)
    return int(np.count_nonzero(y_true == y_pred)) / y_true.size


def weighted_prf(y_true, y_pred, class_count: Optional[int] = None):
    """Support-weighted precision, recall and F1.

    Undefined per-class ratios (0/0) count as 0.  Weighted recall reduces to
    ``sum(tp_c) / n`` which is accuracy; it is computed in that form so the
    identity holds exactly in floating point.
    """
    y_true, y_pred = _pair(y_true, y_pred)
    if class_count is None:
        class_count = int(max(y_true.max(), y_pred.max())) + 1
    n = y_true.size
    support = np.bincount(y_true, minlength=class_count)
    predicted = np.bincount(y_pred, minlength=class_count)
    tp = np.bincount(y_true[y_true == y_pred], minlength=class_count)

    precision = 0.0
    f1 = 0.0
    for c in range(class_count):
        if support[c] == 0:
            continue
        p = tp[c] / predicted[c] if predicted[c] else 0.0
        r = tp[c] / support[c]
        precision += support[c] * p
        f1 += support[c] * (2 * p * r / (p + r) if p + r > 0 else 0.0)
    recall = int(tp.sum()) / n
    return precision / n, recall, f1 / n


def log_loss(y_true, proba, eps: float = LOG_LOSS_EPS) -> float:
    y_true = np.asarray(y_true, dtype=np.int64).ravel()
    proba = np.asarray(proba, dtype=np.float64)
    if proba.ndim != 2 or proba.shape[0] != y_true.size:
        raise LengthMismatch(f"{y_true.size} labels vs probability matrix {proba.shape}")
    if y_true.size == 0:
        raise EmptyInput("log_loss needs at least one sample")
    p_true = np.clip(proba[np.arange(y_true.size), y_true], eps, 1.0 - eps)
    return float(-np.mean(np.log(p_true)))


def roc_auc_binary(y_true, score) -> float:
    """Area under the ROC curve via the Mann-Whitney rank statistic.

    Tied scores receive average ranks, so each tied positive/negative pair
    contributes one half.
    """
    y_true, _ = _pair(y_true, np.zeros(np.size(y_true), dtype=np.int64))
    score = np.asarray(score, dtype=np.float64).ravel()
    if score.size != y_true.size:
        raise LengthMismatch(f"{y_true.size} labels vs {score.size} scores")
    pos = y_true == 1
    n_pos = int(pos.sum())
    n_neg = y_true.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassPresent("ROC-AUC needs both classes present")
    ranks = rankdata(score)
    u = math.fsum(ranks[pos]) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def evaluate(y_true, proba, class_count: Optional[int] = None) -> MetricsRecord:
    """All reporting metrics for a probability matrix; ROC-AUC only for binary."""
    proba = np.asarray(proba, dtype=np.float64)
    class_count = class_count or proba.shape[1]
    y_pred = proba.argmax(axis=1)
    precision, recall, f1 = weighted_prf(y_true, y_pred, class_count)
    auc = None
    if class_count == 2 and np.unique(y_true).size == 2:
        auc = roc_auc_binary(y_true, proba[:, 1])
    return MetricsRecord(
        accuracy=accuracy(y_true, y_pred),
        f1_weighted=f1,
        precision_weighted=precision,
        recall_weighted=recall,
        log_loss=log_loss(y_true, proba),
        roc_auc=auc,
    )
