"""The recursive stacking loop.

Per outer fold:

* level 0 fits the full pool on the original features (the baseline) and
  collects its out-of-fold (OOF) class probabilities;
* level ``l`` blends the OOF probabilities of the previous level's
  survivors with the previous feature matrix, optionally compresses the
  result, refits the survivors on it, scores them by OOF ROC-AUC (binary) or
  OOF accuracy (multi-class) on that same matrix, and prunes;
* recursion stops after ``levels`` or at the first level whose survivor
  count drops below ``min_survivors``;
* the stack-of-stacking step trains the original pool on the concatenation
  of every completed level's feature matrix.

The OOF probabilities computed for pruning at level ``l`` are exactly the
meta-features that level ``l + 1`` blends in, so they are computed once and
carried forward.  Test-side meta-features come from each survivor refit on
the full level training matrix.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import learners
from .compress import CompressionPlan, SfeConfig, compress
from .data import ColumnMeta, Dataset, FeatureMatrix, Task, stratified_folds
from .errors import ConfigInvalid, ShapeMismatch
from .learners import LearnerPool, LearnerSpec
from .metrics import MetricsRecord, accuracy, evaluate, roc_auc_binary
from .prune import PruneConfig, PruneOutcome, prune
from .seeding import derive_seed

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentConfig:
    levels: int = 10
    outer_folds: int = 5
    inner_folds: int = 5
    plan: CompressionPlan = CompressionPlan()
    prune: PruneConfig = PruneConfig()
    pool: Optional[LearnerPool] = None
    seed: int = 0
    n_jobs: int = 1
    sfe: SfeConfig = SfeConfig()

    def __post_init__(self):
        if self.levels < 1:
            raise ConfigInvalid(f"levels must be >= 1, got {self.levels}")
        if self.outer_folds < 2 or self.inner_folds < 2:
            raise ConfigInvalid("outer and inner fold counts must be >= 2")
        if self.n_jobs < 1:
            raise ConfigInvalid(f"n_jobs must be >= 1, got {self.n_jobs}")

    def pool_for(self, task) -> LearnerPool:
        return self.pool if self.pool is not None else learners.default_pool(task)


@dataclass
class LevelState:
    """Working state of one fold at one level.

    ``evaluated`` are the models fitted at this level (the previous level's
    survivors); ``survivors`` are those retained by pruning.  ``oof`` and
    ``test_meta`` hold the meta-feature columns of every evaluated model,
    ready to be blended into the next level.
    """

    level: int
    X_train: FeatureMatrix
    X_test: FeatureMatrix
    evaluated: tuple
    survivors: tuple
    oof: FeatureMatrix
    test_meta: FeatureMatrix
    oof_scores: dict
    metrics: dict
    runtime: dict
    blended_width: int
    compressed: bool = False
    prune_outcome: Optional[PruneOutcome] = None

    @property
    def feature_count(self) -> int:
        return self.X_train.cols

    @property
    def halted(self) -> bool:
        return self.prune_outcome is not None and self.prune_outcome.halted

    @property
    def survivor_ids(self) -> tuple:
        return tuple(s.id for s in self.survivors)


@dataclass(frozen=True)
class LevelSummary:
    level: int
    feature_count: int
    blended_width: int
    compressed: bool
    evaluated_ids: tuple
    survivor_ids: tuple
    oof_scores: dict
    blurred_scores: dict
    threshold: Optional[float]
    halted: bool
    metrics: dict
    runtime: dict

    @classmethod
    def of(cls, state: LevelState) -> "LevelSummary":
        outcome = state.prune_outcome
        blurred = {}
        if outcome is not None:
            blurred = dict(zip((s.id for s in state.evaluated), outcome.blurred_scores.tolist()))
        return cls(
            level=state.level,
            feature_count=state.feature_count,
            blended_width=state.blended_width,
            compressed=state.compressed,
            evaluated_ids=tuple(s.id for s in state.evaluated),
            survivor_ids=state.survivor_ids,
            oof_scores=dict(state.oof_scores),
            blurred_scores=blurred,
            threshold=None if outcome is None else outcome.threshold,
            halted=state.halted,
            metrics=dict(state.metrics),
            runtime=dict(state.runtime),
        )


@dataclass(frozen=True)
class FoldReport:
    fold: int
    n_train: int
    n_test: int
    levels: tuple
    stack_of_stack: dict
    stack_of_stack_width: int
    stack_of_stack_runtime: dict

    @property
    def baseline(self) -> dict:
        return self.levels[0].metrics

    @property
    def halted_at(self) -> Optional[int]:
        last = self.levels[-1]
        return last.level if last.halted else None


@dataclass(frozen=True)
class DatasetDescriptor:
    rows: int
    cols: int
    class_count: int
    task: str


@dataclass(frozen=True)
class RunReport:
    dataset: DatasetDescriptor
    config: ExperimentConfig
    pool_ids: tuple
    folds: tuple = field(default_factory=tuple)

    @property
    def compression_events(self) -> list:
        """``(fold, level)`` pairs at which compression ran."""
        return [(f.fold, lv.level) for f in self.folds for lv in f.levels if lv.compressed]


# -- building blocks ------------------------------------------------------------


def _width_per_model(class_count: int) -> int:
    return 1 if class_count == 2 else class_count


def _meta_block(model_id: str, proba: np.ndarray, level: int) -> FeatureMatrix:
    """Binary tasks keep the positive-class column only."""
    cols = [1] if proba.shape[1] == 2 else list(range(proba.shape[1]))
    return FeatureMatrix(proba[:, cols], tuple(ColumnMeta.oof(model_id, c, level) for c in cols))


def _pruning_score(y, proba: np.ndarray) -> float:
    if proba.shape[1] == 2:
        return roc_auc_binary(y, proba[:, 1])
    return accuracy(y, proba.argmax(axis=1))


def _with_seed(spec: LearnerSpec, *keys) -> LearnerSpec:
    return LearnerSpec(spec.id, spec.kind, dict(spec.hyperparams), derive_seed(spec.seed, *keys))


def _oof_proba(spec, X: np.ndarray, y, folds, class_count, keys) -> np.ndarray:
    proba = np.empty((X.shape[0], class_count))
    for k, (train, held) in enumerate(folds):
        model = learners.fit(_with_seed(spec, *keys, "oof", k), X[train], y[train], class_count)
        proba[held] = learners.predict_proba(model, X[held])
    return proba


def _map(executor, fn, items):
    if executor is None:
        return [fn(i) for i in items]
    return list(executor.map(fn, items))


def oof_probabilities(
    specs,
    X: FeatureMatrix,
    y,
    inner_folds: int,
    seed,
    class_count: Optional[int] = None,
    level: int = 1,
    executor=None,
):
    """Out-of-fold class probabilities of every spec on ``X``.

    Returns ``(meta, scores)``: ``meta`` has one column per model (binary,
    positive class) or ``class_count`` columns per model, in spec order; ``scores`` holds
    each model's OOF ROC-AUC (binary) or OOF accuracy (multi-class).
    """
    y = np.asarray(y, dtype=np.int64)
    class_count = class_count or int(y.max()) + 1
    folds = list(stratified_folds(y, inner_folds, seed))
    specs = list(specs)

    def run(spec):
        return _oof_proba(spec, X.values, y, folds, class_count, (seed, level))

    probas = _map(executor, run, specs)
    meta = FeatureMatrix.hstack(_meta_block(s.id, p, level) for s, p in zip(specs, probas))
    scores = np.array([_pruning_score(y, p) for p in probas])
    return meta, scores


def blend(
    level: int,
    meta_train: FeatureMatrix,
    prev_train: FeatureMatrix,
    prev_test: FeatureMatrix,
    test_predictions: FeatureMatrix,
):
    """Prepend meta-feature columns to the previous level's matrices."""
    if meta_train.rows != prev_train.rows or test_predictions.rows != prev_test.rows:
        raise ShapeMismatch(
            f"level {level}: OOF rows {meta_train.rows} vs train {prev_train.rows}, "
            f"test predictions {test_predictions.rows} vs test {prev_test.rows}"
        )
    if meta_train.columns != test_predictions.columns:
        raise ShapeMismatch(f"level {level}: train and test meta-feature columns differ")
    if prev_train.columns != prev_test.columns:
        raise ShapeMismatch(f"level {level}: previous train and test columns differ")
    return FeatureMatrix.hstack([meta_train, prev_train]), FeatureMatrix.hstack([test_predictions, prev_test])


def _meta_columns(matrix: FeatureMatrix, model_ids) -> FeatureMatrix:
    keep = set(model_ids)
    return matrix.take_columns([i for i, c in enumerate(matrix.columns) if c.model_id in keep])


# -- fold runner -------------------------------------------------------------------


@dataclass
class _FoldContext:
    cfg: ExperimentConfig
    y_train: np.ndarray
    y_test: np.ndarray
    class_count: int
    fold: int
    executor: Optional[ThreadPoolExecutor] = None

    def seed(self, *keys) -> int:
        return derive_seed(self.cfg.seed, self.fold, *keys)


def _fit_level(ctx: _FoldContext, specs, X: FeatureMatrix, X_test: FeatureMatrix, level: int):
    """Refit every spec on ``X``, evaluate on ``X_test`` and collect OOF output."""
    inner_seed = ctx.seed(level, "inner-folds")
    folds = list(stratified_folds(ctx.y_train, ctx.cfg.inner_folds, inner_seed))
    meta_level = level + 1

    def run(spec):
        start = time.perf_counter()
        keys = (ctx.cfg.seed, ctx.fold, level)
        model = learners.fit(_with_seed(spec, *keys, "full"), X, ctx.y_train, ctx.class_count)
        test_proba = learners.predict_proba(model, X_test)
        oof = _oof_proba(spec, X.values, ctx.y_train, folds, ctx.class_count, keys)
        return test_proba, oof, time.perf_counter() - start

    results = _map(ctx.executor, run, specs)
    metrics, runtime, scores = {}, {}, {}
    oof_blocks, test_blocks = [], []
    for spec, (test_proba, oof, elapsed) in zip(specs, results):
        metrics[spec.id] = evaluate(ctx.y_test, test_proba, ctx.class_count)
        runtime[spec.id] = elapsed
        scores[spec.id] = _pruning_score(ctx.y_train, oof)
        oof_blocks.append(_meta_block(spec.id, oof, meta_level))
        test_blocks.append(_meta_block(spec.id, test_proba, meta_level))
    return metrics, runtime, scores, FeatureMatrix.hstack(oof_blocks), FeatureMatrix.hstack(test_blocks)


def baseline_level(ctx: _FoldContext, pool: LearnerPool, X_train: FeatureMatrix, X_test: FeatureMatrix) -> LevelState:
    specs = tuple(pool.specs)
    metrics, runtime, scores, oof, test_meta = _fit_level(ctx, specs, X_train, X_test, 0)
    return LevelState(
        level=0,
        X_train=X_train,
        X_test=X_test,
        evaluated=specs,
        survivors=specs,
        oof=oof,
        test_meta=test_meta,
        oof_scores=scores,
        metrics=metrics,
        runtime=runtime,
        blended_width=X_train.cols,
    )


def run_level(state: LevelState, ctx: _FoldContext) -> LevelState:
    """Blend, maybe compress, refit, score and prune one level."""
    cfg = ctx.cfg
    level = state.level + 1
    specs = state.survivors
    ids = [s.id for s in specs]
    X, X_test = blend(
        level,
        _meta_columns(state.oof, ids),
        state.X_train,
        state.X_test,
        _meta_columns(state.test_meta, ids),
    )
    blended_width = X.cols

    compressed = cfg.plan.fires_at(level)
    if compressed:
        result = compress(
            cfg.plan.method, X, X_test, ctx.y_train, level,
            seed=ctx.seed(level, "compress"), n_classes=ctx.class_count, sfe_cfg=cfg.sfe,
        )
        X, X_test = result.train, result.test
        log.debug("fold %d level %d: %s %d -> %d columns", ctx.fold, level, result.method, blended_width, X.cols)

    metrics, runtime, scores, oof, test_meta = _fit_level(ctx, specs, X, X_test, level)
    noise_seeds = [ctx.seed(level, s.id, "prune", cfg.prune.seed) for s in specs]
    outcome = prune([scores[i] for i in ids], ids, cfg.prune, seed=noise_seeds)
    kept = set(outcome.retained_ids)
    survivors = tuple(s for s in specs if s.id in kept)
    log.debug("fold %d level %d: %d -> %d models", ctx.fold, level, len(specs), len(survivors))

    return LevelState(
        level=level,
        X_train=X,
        X_test=X_test,
        evaluated=specs,
        survivors=survivors,
        oof=oof,
        test_meta=test_meta,
        oof_scores=scores,
        metrics=metrics,
        runtime=runtime,
        blended_width=blended_width,
        compressed=compressed,
        prune_outcome=outcome,
    )


def stack_of_stack(
    acc_train: FeatureMatrix,
    acc_test: FeatureMatrix,
    pool: LearnerPool,
    y_train,
    y_test,
    class_count: int,
    seed: int = 0,
    executor=None,
):
    """Train the whole original pool on the accumulated level matrices.

    Returns ``(metrics, runtime)`` dictionaries keyed by model id.
    """
    y_train = np.asarray(y_train, dtype=np.int64)

    def run(spec):
        start = time.perf_counter()
        model = learners.fit(_with_seed(spec, seed, "sos"), acc_train, y_train, class_count)
        proba = learners.predict_proba(model, acc_test)
        return evaluate(y_test, proba, class_count), time.perf_counter() - start

    results = _map(executor, run, list(pool.specs))
    metrics = {s.id: m for s, (m, _) in zip(pool.specs, results)}
    runtime = {s.id: t for s, (_, t) in zip(pool.specs, results)}
    return metrics, runtime


def run_fold(
    dataset: Dataset, cfg: ExperimentConfig, train_idx, test_idx, fold: int = 0, executor=None
) -> FoldReport:
    pool = cfg.pool_for(dataset.task)
    ctx = _FoldContext(
        cfg=cfg,
        y_train=dataset.labels[train_idx],
        y_test=dataset.labels[test_idx],
        class_count=dataset.class_count,
        fold=fold,
        executor=executor,
    )
    X_train = dataset.features.take_rows(train_idx)
    X_test = dataset.features.take_rows(test_idx)

    state = baseline_level(ctx, pool, X_train, X_test)
    summaries = [LevelSummary.of(state)]
    acc_train, acc_test = [X_train], [X_test]
    for _ in range(cfg.levels):
        state = run_level(state, ctx)
        summaries.append(LevelSummary.of(state))
        if state.halted:
            log.info("fold %d halted at level %d (%d survivors)", fold, state.level, len(state.survivors))
            break
        acc_train.append(state.X_train)
        acc_test.append(state.X_test)

    sos_train = FeatureMatrix.hstack(acc_train)
    sos_test = FeatureMatrix.hstack(acc_test)
    sos_metrics, sos_runtime = stack_of_stack(
        sos_train, sos_test, pool, ctx.y_train, ctx.y_test, dataset.class_count,
        seed=ctx.seed("sos"), executor=executor,
    )
    return FoldReport(
        fold=fold,
        n_train=len(train_idx),
        n_test=len(test_idx),
        levels=tuple(summaries),
        stack_of_stack=sos_metrics,
        stack_of_stack_width=sos_train.cols,
        stack_of_stack_runtime=sos_runtime,
    )


def run_experiment(dataset: Dataset, cfg: ExperimentConfig) -> RunReport:
    """Outer stratified cross-validation around the recursive stack."""
    pool = cfg.pool_for(dataset.task)
    plan = stratified_folds(dataset.labels, cfg.outer_folds, derive_seed(cfg.seed, "outer-folds"))
    executor = ThreadPoolExecutor(cfg.n_jobs) if cfg.n_jobs > 1 else None
    try:
        folds = []
        for fold, (train_idx, test_idx) in enumerate(plan):
            log.info("fold %d/%d: %d train, %d test rows", fold + 1, plan.k, len(train_idx), len(test_idx))
            folds.append(run_fold(dataset, cfg, train_idx, test_idx, fold, executor))
    finally:
        if executor is not None:
            executor.shutdown()
    descriptor = DatasetDescriptor(
        rows=dataset.features.rows,
        cols=dataset.features.cols,
        class_count=dataset.class_count,
        task=Task(dataset.task).value,
    )
    return RunReport(dataset=descriptor, config=cfg, pool_ids=tuple(pool.ids), folds=tuple(folds))
