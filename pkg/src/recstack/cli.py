"""Command-line experiment runner.

    recstack run --dataset d.csv --label y --levels 10 --fs periodic \\
        --method sfe --lambda 0.05 --folds 5 --seed 7 --out results/

Options may also come from a JSON object passed with ``--config``; its keys
are the flag names (``inner-folds`` or ``inner_folds`` both work).  Flags
given on the command line override config-file values.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from datetime import datetime, timezone

from . import __version__
from .compress import METHODS, CompressionPlan
from .data import Task, load_csv
from .engine import ExperimentConfig, run_experiment
from .errors import ConfigInvalid, StackError
from .learners import default_pool
from .prune import PruneConfig
from .reports import emit_reports

log = logging.getLogger("recstack")

DEFAULTS = {
    "dataset": None,
    "label": None,
    "categorical": None,
    "task": "auto",
    "levels": 10,
    "fs": "none",
    "method": "sfe",
    "lambda": 0.0,
    "tmin": 2,
    "folds": 5,
    "inner_folds": 5,
    "seed": 0,
    "jobs": 1,
    "out": None,
}
_FS_TO_SCHEDULE = {"none": "none", "each": "each", "periodic": "periodic"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="recstack", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"recstack {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser(
        "run",
        help="run a recursive stacking experiment and write reports",
        argument_default=argparse.SUPPRESS,
    )
    run.add_argument("--config", help="JSON file with default values for any option below")
    run.add_argument("--dataset", help="CSV file with a header row (required)")
    run.add_argument("--label", help="name of the label column (required)")
    run.add_argument("--categorical", help="comma-separated categorical columns; others auto-detected")
    run.add_argument("--task", choices=["auto", "binary", "multiclass"], help="default: auto")
    run.add_argument("--levels", type=int, help="stacking depth L >= 1 (default: 10)")
    run.add_argument(
        "--fs", choices=list(_FS_TO_SCHEDULE),
        help="compression schedule: never, every level, or levels 3/6/9 (default: none)",
    )
    run.add_argument("--method", choices=METHODS, help="compression method (default: sfe)")
    run.add_argument(
        "--lambda", dest="lambda", type=float,
        help="pruning noise factor in [0, 1]; studied values 0, 0.05, 0.1 (default: 0)",
    )
    run.add_argument("--tmin", type=int, help="halt when fewer models survive (default: 2)")
    run.add_argument("--folds", type=int, help="outer CV folds (default: 5)")
    run.add_argument("--inner-folds", dest="inner_folds", type=int, help="OOF folds (default: 5)")
    run.add_argument("--seed", type=int, help="master random seed (default: 0)")
    run.add_argument("--jobs", type=int, help="parallel model fits within a level (default: 1)")
    run.add_argument("--out", help="output directory for reports (required)")
    run.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def _load_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigInvalid(f"config file {path} must hold a JSON object")
    options = {}
    for key, value in data.items():
        norm = key.replace("-", "_")
        if norm not in DEFAULTS:
            raise ConfigInvalid(f"unknown config key {key!r}")
        options[norm] = value
    return options


def resolve_options(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags (flags win) and validate."""
    options = dict(DEFAULTS)
    flags = {k: v for k, v in vars(args).items() if k in DEFAULTS}
    if getattr(args, "config", None):
        options.update(_load_config_file(args.config))
    options.update(flags)

    for key in ("dataset", "label", "out"):
        if not options[key]:
            raise ConfigInvalid(f"--{key} is required")
    if isinstance(options["categorical"], str):
        options["categorical"] = [c.strip() for c in options["categorical"].split(",") if c.strip()]

    for key in ("levels", "tmin", "folds", "inner_folds", "seed", "jobs"):
        if not isinstance(options[key], int) or isinstance(options[key], bool):
            raise ConfigInvalid(f"{key} must be an integer, got {options[key]!r}")
    if options["levels"] < 1:
        raise ConfigInvalid(f"levels must be >= 1, got {options['levels']}")
    if options["tmin"] < 1:
        raise ConfigInvalid(f"tmin must be >= 1, got {options['tmin']}")
    if options["folds"] < 2 or options["inner_folds"] < 2:
        raise ConfigInvalid("folds and inner-folds must be >= 2")
    if options["jobs"] < 1:
        raise ConfigInvalid("jobs must be >= 1")
    if options["seed"] < 0:
        raise ConfigInvalid("seed must be non-negative")
    noise = options["lambda"]
    if not isinstance(noise, (int, float)) or isinstance(noise, bool) or not 0.0 <= noise <= 1.0:
        raise ConfigInvalid(f"lambda must lie in [0, 1], got {noise!r}")
    options["lambda"] = float(noise)
    if options["fs"] not in _FS_TO_SCHEDULE:
        raise ConfigInvalid(f"fs must be one of {sorted(_FS_TO_SCHEDULE)}")
    if options["method"] not in METHODS:
        raise ConfigInvalid(f"method must be one of {METHODS}")
    if options["task"] not in ("auto", "binary", "multiclass"):
        raise ConfigInvalid("task must be auto, binary or multiclass")
    return options


def _file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def run_command(options: dict) -> int:
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    t0 = time.perf_counter()
    dataset = load_csv(options["dataset"], options["label"], options["categorical"])
    if options["task"] != "auto" and Task(options["task"]) is not dataset.task:
        raise ConfigInvalid(
            f"--task {options['task']} but the label column has {dataset.class_count} classes"
        )

    cfg = ExperimentConfig(
        levels=options["levels"],
        outer_folds=options["folds"],
        inner_folds=options["inner_folds"],
        plan=CompressionPlan(_FS_TO_SCHEDULE[options["fs"]], options["method"]),
        prune=PruneConfig(noise_scale=options["lambda"], min_survivors=options["tmin"]),
        pool=default_pool(dataset.task),
        seed=options["seed"],
        n_jobs=options["jobs"],
    )
    log.info(
        "%s: %d rows, %d columns, %d classes",
        options["dataset"], dataset.features.rows, dataset.features.cols, dataset.class_count,
    )
    report = run_experiment(dataset, cfg)

    echo = {k: v for k, v in options.items() if k != "jobs"}
    manifest = {
        "software": {"name": "recstack", "version": __version__},
        "config": echo,
        "dataset": {
            "rows": dataset.features.rows,
            "cols": dataset.features.cols,
            "classes": dataset.class_count,
            "task": dataset.task.value,
            "sha256": _file_sha256(options["dataset"]),
        },
        "timestamps": {
            "started": started,
            "finished": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        },
    }
    paths = emit_reports(report, options["out"], manifest)
    log.info("wrote %s in %.1fs", ", ".join(p.name for p in paths.values()), time.perf_counter() - t0)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(getattr(args, "verbose", 0) + 1, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        options = resolve_options(args)
        return run_command(options)
    except ConfigInvalid as exc:
        print(f"recstack: config error: {exc}", file=sys.stderr)
        return 2
    except (StackError, OSError) as exc:
        print(f"recstack: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
