"""Noise-blurred percentile pruning of the model pool."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyScores


@dataclass(frozen=True)
class PruneConfig:
    """``noise_scale`` sets the score noise; recursion halts below ``min_survivors`` models.

    The studied noise levels are 0 (strict), 0.05 (light) and 0.1 (moderate).
    """

    noise_scale: float = 0.0
    min_survivors: int = 2
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.noise_scale <= 1.0:
            raise ValueError(f"noise_scale must lie in [0, 1], got {self.noise_scale}")
        if self.min_survivors < 1:
            raise ValueError(f"min_survivors must be at least 1, got {self.min_survivors}")


@dataclass(frozen=True)
class PruneOutcome:
    raw_scores: np.ndarray
    blurred_scores: np.ndarray
    threshold: float
    percentile_rank: float
    retained_ids: tuple
    halted: bool


def _scores(scores) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64).ravel()
    if scores.size == 0:
        raise EmptyScores("score vector is empty")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    return scores


def blur_scores(scores, noise_scale: float, seed) -> np.ndarray:
    """Add i.i.d. Gaussian noise with std ``noise_scale * (max(scores) - min(scores))``.

    ``seed`` is either one seed for the whole vector or a sequence with one
    seed per score, so a model's noise can be keyed to the model itself.
    Zero noise (``noise_scale == 0`` or constant scores) returns an exact copy.
    """
    scores = _scores(scores)
    spread = noise_scale * (scores.max() - scores.min())
    if spread == 0:
        return scores.copy()
    if isinstance(seed, (list, tuple, np.ndarray)):
        if len(seed) != scores.size:
            raise ValueError(f"{len(seed)} seeds for {scores.size} scores")
        noise = np.array([np.random.default_rng(s).normal(0.0, spread) for s in seed])
    else:
        noise = np.random.default_rng(seed).normal(0.0, spread, size=scores.size)
    return scores + noise


def percentile_rank(blurred) -> float:
    """``5 + 80 * var`` with population variance, clamped to [0, 100]."""
    blurred = _scores(blurred)
    return float(np.clip(5.0 + 80.0 * np.std(blurred) ** 2, 0.0, 100.0))


def threshold(blurred) -> float:
    """Adaptive cut-off: the ``percentile_rank`` percentile, linearly interpolated."""
    blurred = _scores(blurred)
    return float(np.percentile(blurred, percentile_rank(blurred)))


def prune(scores, pool, cfg: PruneConfig, seed=None) -> PruneOutcome:
    """Blur ``scores``, threshold them, and keep models scoring at or above the cut-off.

    ``pool`` is a :class:`~recstack.learners.LearnerPool` or a sequence of
    model ids aligned with ``scores``.  ``seed`` overrides ``cfg.seed`` so callers
    can draw fresh noise per level.
    """
    scores = _scores(scores)
    ids = list(getattr(pool, "ids", pool))
    if len(ids) != scores.size:
        raise ValueError(f"{scores.size} scores for {len(ids)} models")
    blurred = blur_scores(scores, cfg.noise_scale, cfg.seed if seed is None else seed)
    rank = percentile_rank(blurred)
    cut = float(np.percentile(blurred, rank))
    retained = tuple(i for i, s in zip(ids, blurred) if s >= cut)
    return PruneOutcome(
        raw_scores=scores,
        blurred_scores=blurred,
        threshold=cut,
        percentile_rank=rank,
        retained_ids=retained,
        halted=len(retained) < cfg.min_survivors,
    )
