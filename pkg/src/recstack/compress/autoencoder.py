"""Autoencoder compression to one third of the input width."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import _nn
from ..data import ColumnMeta, FeatureMatrix
from ..errors import WidthTooSmall

TWO_LAYER = "ae2"
THREE_LAYER = "ae3"


def layer_widths(d: int, depth: str = TWO_LAYER) -> list:
    """Encoder widths from input to latent, e.g. ``[12, 6, 4]`` for a 3-layer net."""
    if d < 2:
        raise WidthTooSmall(f"autoencoder needs at least 2 input columns, got {d}")
    if depth == TWO_LAYER:
        return [d, math.ceil(d / 3)]
    if depth == THREE_LAYER:
        return [d, math.ceil(d / 2), math.ceil(d / 3)]
    raise ValueError(f"unknown autoencoder depth {depth!r}")


@dataclass
class AutoencoderModel:
    """Tanh encoder stack with a mirrored decoder and linear reconstruction.

    Inputs are standardised with training statistics before encoding; the
    loss is the mean squared reconstruction error in that space.
    """

    input_dim: int
    depth: str = TWO_LAYER
    epochs: int = 300
    lr: float = 0.01
    seed: int = 0
    loss_history: list = field(default_factory=list)

    def __post_init__(self):
        self.widths = layer_widths(self.input_dim, self.depth)

    @property
    def latent_dim(self) -> int:
        return self.widths[-1]

    def fit(self, X):
        rng = np.random.default_rng(self.seed)
        X = np.asarray(X, dtype=np.float64)
        self.scaler_ = _nn.Standardizer().fit(X)
        Z = self.scaler_.transform(X)
        dims = self.widths + self.widths[-2::-1]
        self.weights_ = [_nn.glorot(rng, a, b) for a, b in zip(dims[:-1], dims[1:])]
        self.biases_ = [np.zeros(b) for b in dims[1:]]
        opt = _nn.Adam(self.weights_ + self.biases_, lr=self.lr)
        n = Z.shape[0]
        n_layers = len(self.weights_)
        self.loss_history = []

        for _ in range(self.epochs):
            acts = [Z]
            for i, (W, b) in enumerate(zip(self.weights_, self.biases_)):
                h = acts[-1] @ W + b
                acts.append(h if i == n_layers - 1 else np.tanh(h))
            resid = acts[-1] - Z
            self.loss_history.append(float(np.mean(resid * resid)))
            grad = 2.0 * resid / resid.size
            gW, gb = [None] * n_layers, [None] * n_layers
            for i in range(n_layers - 1, -1, -1):
                if i != n_layers - 1:
                    grad = grad * (1.0 - acts[i + 1] ** 2)
                gW[i] = acts[i].T @ grad
                gb[i] = grad.sum(axis=0)
                grad = grad @ self.weights_[i].T
            opt.step(gW + gb)
        self.n_samples_ = n
        return self

    def _encode_scaled(self, Z):
        h = Z
        for W, b in zip(self.weights_[: len(self.widths) - 1], self.biases_):
            h = np.tanh(h @ W + b)
        return h

    def encode(self, X) -> np.ndarray:
        return self._encode_scaled(self.scaler_.transform(np.asarray(X, dtype=np.float64)))

    def reconstruct(self, X) -> np.ndarray:
        """Round trip through encoder and decoder, returned in input units."""
        h = self.encode(X)
        k = len(self.widths) - 1
        n_layers = len(self.weights_)
        for i in range(k, n_layers):
            h = h @ self.weights_[i] + self.biases_[i]
            if i != n_layers - 1:
                h = np.tanh(h)
        return self.scaler_.inverse_transform(h)


def ae_fit_transform(
    X_train: FeatureMatrix,
    X_test: FeatureMatrix,
    depth: str = TWO_LAYER,
    seed: int = 0,
    level: int = 0,
    epochs: int = 300,
):
    """Fit an autoencoder on ``X_train`` and encode both matrices.

    Returns ``(model, (train, test))``; output columns are marked as
    compressed at ``level`` by ``depth``.
    """
    model = AutoencoderModel(X_train.cols, depth=depth, epochs=epochs, seed=seed)
    model.fit(X_train.values)
    columns = tuple(ColumnMeta.compressed(i, level, depth) for i in range(model.latent_dim))
    train = FeatureMatrix(model.encode(X_train.values), columns)
    test = FeatureMatrix(model.encode(X_test.values), columns) if X_test is not None else None
    return model, (train, test)
