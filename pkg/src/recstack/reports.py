"""CSV and JSON report emission for a finished run.

Files written to the output directory:

``metrics.csv``    fold, level, model_id, accuracy, f1_w, precision_w, recall_w, logloss, roc_auc
``features.csv``   fold, level, feature_count
``runtime.csv``    fold, level, model_id, seconds, normalized
``survivors.csv``  fold, level, survivor_count, halted, survivor_ids
``summary.json``   run manifest plus per-level mean/std over folds

Stack-of-stacking rows use ``level = "sos"``.  Numbers are written with 12
significant digits and the summary is aggregated from those written values,
so it can be recomputed from the CSV files exactly.
"""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from pathlib import Path

from .engine import RunReport

SOS_LEVEL = "sos"
METRIC_COLUMNS = ("accuracy", "f1_w", "precision_w", "recall_w", "logloss", "roc_auc")
_RECORD_FIELDS = ("accuracy", "f1_weighted", "precision_weighted", "recall_weighted", "log_loss", "roc_auc")


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"refusing to write non-finite value {value!r}")
    return f"{value:.12g}"


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def metric_rows(report: RunReport) -> list:
    rows = []
    for fold in report.folds:
        stages = [(str(lv.level), lv.metrics) for lv in fold.levels]
        stages.append((SOS_LEVEL, fold.stack_of_stack))
        for level, metrics in stages:
            for model_id, record in metrics.items():
                rows.append(
                    [str(fold.fold), level, model_id]
                    + [fmt(getattr(record, f)) for f in _RECORD_FIELDS]
                )
    return rows


def runtime_rows(report: RunReport) -> list:
    raw = []
    for fold in report.folds:
        stages = [(str(lv.level), lv.runtime) for lv in fold.levels]
        stages.append((SOS_LEVEL, fold.stack_of_stack_runtime))
        for level, runtime in stages:
            for model_id, seconds in runtime.items():
                raw.append((str(fold.fold), level, model_id, seconds))
    peak = max((r[3] for r in raw), default=0.0)
    return [
        [f, lv, m, fmt(s), fmt(s / peak if peak > 0 else 0.0)]
        for f, lv, m, s in raw
    ]


def feature_rows(report: RunReport) -> list:
    return [
        [str(fold.fold), str(lv.level), str(lv.feature_count)]
        for fold in report.folds
        for lv in fold.levels
    ]


def survivor_rows(report: RunReport) -> list:
    return [
        [str(fold.fold), str(lv.level), str(len(lv.survivor_ids)), fmt(lv.halted), ";".join(lv.survivor_ids)]
        for fold in report.folds
        for lv in fold.levels
    ]


def mean_std(values) -> dict:
    """Mean and population standard deviation via exact float summation."""
    values = list(values)
    n = len(values)
    mean = math.fsum(values) / n
    std = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / n)
    return {"mean": mean, "std": std, "n": n}


def _level_key(level: str):
    return (1, 0) if level == SOS_LEVEL else (0, int(level))


def aggregate(metrics, features, survivors) -> dict:
    """Per-level mean/std over folds.

    Each fold first contributes its mean over models; those fold means are
    then summarised.  Inputs are the string rows written to the CSV files.
    """
    per_fold = defaultdict(lambda: defaultdict(list))
    for row in metrics:
        fold, level = row[0], row[1]
        for name, cell in zip(METRIC_COLUMNS, row[3:]):
            if cell != "":
                per_fold[(level, name)][fold].append(float(cell))

    levels = defaultdict(dict)
    for (level, name), folds in per_fold.items():
        levels[level][name] = mean_std(math.fsum(v) / len(v) for v in folds.values())
    for fold, level, count in features:
        levels[level].setdefault("_features", []).append(float(count))
    for fold, level, count, *_ in survivors:
        levels[level].setdefault("_survivors", []).append(float(count))
    for level, entry in levels.items():
        if "_features" in entry:
            entry["feature_count"] = mean_std(entry.pop("_features"))
        if "_survivors" in entry:
            entry["survivors"] = mean_std(entry.pop("_survivors"))
    return {k: levels[k] for k in sorted(levels, key=_level_key)}


def emit_reports(report: RunReport, out_dir, manifest: dict) -> dict:
    """Write all report files and return their paths keyed by file stem."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    metrics = metric_rows(report)
    features = feature_rows(report)
    survivors = survivor_rows(report)

    paths = {name: out / f"{name}.csv" for name in ("metrics", "features", "runtime", "survivors")}
    _write_csv(paths["metrics"], ["fold", "level", "model_id", *METRIC_COLUMNS], metrics)
    _write_csv(paths["features"], ["fold", "level", "feature_count"], features)
    _write_csv(paths["runtime"], ["fold", "level", "model_id", "seconds", "normalized"], runtime_rows(report))
    _write_csv(paths["survivors"], ["fold", "level", "survivor_count", "halted", "survivor_ids"], survivors)

    summary = {
        "manifest": manifest,
        "pool": list(report.pool_ids),
        "halted_at": {str(f.fold): f.halted_at for f in report.folds},
        "stack_of_stack_width": {str(f.fold): f.stack_of_stack_width for f in report.folds},
        "levels": aggregate(metrics, features, survivors),
    }
    paths["summary"] = out / "summary.json"
    with paths["summary"].open("w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return paths
