"""Attention-score feature masking.

A one-layer attention classifier computes per-sample scores
``weights = softmax(x W + b)`` (``W`` is d x d), feeds ``x * weights`` to a
linear softmax head and is trained with cross-entropy.  Averaging ``weights``
over the training rows gives one relevance score per column; columns at or
above the 75th percentile of those scores are kept.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _nn
from ..data import FeatureMatrix
from ..errors import WidthTooSmall

KEEP_PERCENTILE = 75.0


def percentile_mask(weights, q: float = KEEP_PERCENTILE) -> np.ndarray:
    """Indices ``i`` with ``weights[i] >= percentile(weights, q)`` (linear interpolation)."""
    weights = np.asarray(weights, dtype=np.float64)
    return np.flatnonzero(weights >= np.percentile(weights, q))


@dataclass
class AttentionSelector:
    input_dim: int
    n_classes: int
    epochs: int = 200
    lr: float = 0.01
    seed: int = 0

    def fit(self, X, y):
        if self.input_dim < 2:
            raise WidthTooSmall(f"attention selection needs at least 2 columns, got {self.input_dim}")
        rng = np.random.default_rng(self.seed)
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        self.scaler_ = _nn.Standardizer().fit(X)
        Z = self.scaler_.transform(X)
        n, d = Z.shape
        Y = _nn.one_hot(y, self.n_classes)

        self.W_ = rng.normal(0.0, 0.01, size=(d, d))
        self.b_ = np.zeros(d)
        self.V_ = _nn.glorot(rng, d, self.n_classes)
        self.c_ = np.zeros(self.n_classes)
        opt = _nn.Adam([self.W_, self.b_, self.V_, self.c_], lr=self.lr)
        self.loss_history = []
        for _ in range(self.epochs):
            weights = _nn.softmax(Z @ self.W_ + self.b_)
            u = Z * weights
            P = _nn.softmax(u @ self.V_ + self.c_)
            self.loss_history.append(float(-np.mean(np.log(np.clip((P * Y).sum(axis=1), 1e-300, None)))))
            g_logits = (P - Y) / n
            g_weights = (g_logits @ self.V_.T) * Z
            g_s = weights * (g_weights - (g_weights * weights).sum(axis=1, keepdims=True))
            opt.step([Z.T @ g_s, g_s.sum(axis=0), u.T @ g_logits, g_logits.sum(axis=0)])

        self.column_weights_ = self.attention(X).mean(axis=0)
        self.kept_indices_ = percentile_mask(self.column_weights_)
        return self

    def attention(self, X) -> np.ndarray:
        """Per-sample attention vectors (rows sum to one)."""
        return _nn.softmax(self.scaler_.transform(np.asarray(X, dtype=np.float64)) @ self.W_ + self.b_)


def attention_select(
    X_train: FeatureMatrix,
    X_test: FeatureMatrix,
    y,
    seed: int = 0,
    n_classes=None,
    epochs: int = 200,
):
    """Train the attention scorer on ``X_train`` and mask both matrices.

    Returns ``(selector, (train, test))``; ``selector.kept_indices_`` lists the
    surviving columns in their original order.
    """
    y = np.asarray(y, dtype=np.int64)
    n_classes = n_classes or int(y.max()) + 1
    selector = AttentionSelector(X_train.cols, n_classes, epochs=epochs, seed=seed).fit(X_train.values, y)
    kept = selector.kept_indices_.tolist()
    test = X_test.take_columns(kept) if X_test is not None else None
    return selector, (X_train.take_columns(kept), test)
