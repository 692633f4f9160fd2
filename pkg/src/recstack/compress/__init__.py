"""Feature compression back-ends and the level schedule that triggers them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..data import FeatureMatrix
from .attention import AttentionSelector, attention_select, percentile_mask
from .autoencoder import THREE_LAYER, TWO_LAYER, AutoencoderModel, ae_fit_transform, layer_widths
from .sfe import SfeConfig, SfeTrace, relevance, sfe_select, sfe_trace

SCHEDULES = ("none", "each", "periodic")
METHODS = ("sfe", "ae2", "ae3", "attention")
PERIODIC_LEVELS = frozenset({3, 6, 9})


@dataclass(frozen=True)
class CompressionPlan:
    schedule: str = "none"
    method: str = "sfe"

    def __post_init__(self):
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}, got {self.schedule!r}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")

    def fires_at(self, level: int) -> bool:
        if self.schedule == "each":
            return level >= 1
        if self.schedule == "periodic":
            return level in PERIODIC_LEVELS
        return False


@dataclass(frozen=True)
class CompressionResult:
    method: str
    train: FeatureMatrix
    test: FeatureMatrix
    kept_indices: Optional[tuple] = None
    details: dict = field(default_factory=dict)


def compress(
    method: str,
    X_train: FeatureMatrix,
    X_test: FeatureMatrix,
    y,
    level: int,
    seed: int,
    n_classes: Optional[int] = None,
    sfe_cfg: SfeConfig = SfeConfig(),
) -> CompressionResult:
    """Fit ``method`` on the training side and apply it to both matrices."""
    if method == "sfe":
        trace = sfe_trace(X_train, y, sfe_cfg)
        idx = list(trace.selected)
        return CompressionResult(
            method, X_train.take_columns(idx), X_test.take_columns(idx), trace.selected,
            {"utilities": trace.utilities},
        )
    if method in (TWO_LAYER, THREE_LAYER):
        model, (train, test) = ae_fit_transform(X_train, X_test, depth=method, seed=seed, level=level)
        return CompressionResult(method, train, test, None, {"widths": model.widths})
    if method == "attention":
        selector, (train, test) = attention_select(X_train, X_test, y, seed=seed, n_classes=n_classes)
        return CompressionResult(
            method, train, test, tuple(selector.kept_indices_.tolist()),
            {"column_weights": selector.column_weights_.tolist()},
        )
    raise ValueError(f"unknown compression method {method!r}")


__all__ = [
    "AttentionSelector",
    "AutoencoderModel",
    "CompressionPlan",
    "CompressionResult",
    "PERIODIC_LEVELS",
    "SfeConfig",
    "SfeTrace",
    "THREE_LAYER",
    "TWO_LAYER",
    "ae_fit_transform",
    "attention_select",
    "compress",
    "layer_widths",
    "percentile_mask",
    "relevance",
    "sfe_select",
    "sfe_trace",
]
