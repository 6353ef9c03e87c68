"""Command-line entry point.

Examples::

    flgc --task classify --dataset iris --knn auto --grid-lambda 2^-8:2^8:17 \\
         --grid-alpha 0,0.1 --grid-steps 0:20 --repeats 30 --out-dir runs/iris
    flgc --task cluster --dataset wine --lambda 3 --alpha 0.3 --steps 15 --out-dir runs/wine

Outputs go to ``--out-dir``: ``records.jsonl`` plus a tidy CSV per task.
Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import experiments, presets
from .errors import ConfigError, InputError, NumericalError
from .experiments import RunConfig
from .semi_supervised import log_grid

log = logging.getLogger("flgc")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _number(text):
    text = text.strip()
    if "^" in text:
        base, exp = text.split("^", 1)
        return float(base) ** float(exp)
    return float(text)


def parse_log_grid(text):
    """``lo:hi:n`` -> n log-spaced values; ``2^-8`` style powers allowed."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected lo:hi:n, got {text!r}")
    try:
        lo, hi, n = _number(parts[0]), _number(parts[1]), int(parts[2])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if not (lo > 0 and hi >= lo and n >= 1):
        raise argparse.ArgumentTypeError("need 0 < lo <= hi and n >= 1")
    return tuple(log_grid(lo, hi, n))


def parse_float_list(text):
    try:
        return tuple(_number(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def parse_int_list(text):
    """Comma list of ints or ``a:b`` inclusive ranges, e.g. ``0:5,10``."""
    out = []
    try:
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            if ":" in part:
                a, b = part.split(":", 1)
                out.extend(range(int(a), int(b) + 1))
            else:
                out.append(int(part))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return tuple(out)


def parse_knn(text):
    if text == "auto":
        return "auto"
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("--knn takes an integer or 'auto'") from None
    if k < 0:
        raise argparse.ArgumentTypeError("--knn must be non-negative")
    return k


def build_parser():
    ap = argparse.ArgumentParser(
        prog="flgc",
        description="Closed-form linear graph convolution: classification, clustering and benchmark sweeps.",
    )
    ap.add_argument("--task", required=True, choices=experiments.TASKS)
    src = ap.add_argument_group("data")
    src.add_argument("--dataset", choices=("iris", "wine"), help="bundled dataset")
    src.add_argument("--features", help="feature CSV, one row per node")
    src.add_argument("--labels-col", default="-1",
                     help="label column name or index (default: last column)")
    src.add_argument("--no-labels", action="store_true", help="the feature CSV has no label column")
    src.add_argument("--no-header", action="store_true", help="the feature CSV has no header row")
    src.add_argument("--scale", choices=("minmax", "none"),
                     help="feature scaling (default: minmax, or the preset's choice)")
    src.add_argument("--split-file", help="JSON with labeled/validation/test node ids")
    src.add_argument("--labeled-fraction", type=float, default=0.1)
    src.add_argument("--clusters", type=int, help="number of clusters (default: number of classes)")

    g = ap.add_argument_group("graph")
    g.add_argument("--edge-list", help="edge-list file 'i j [weight]'")
    g.add_argument("--knn", type=parse_knn, help="neighbors per node, or 'auto' for floor(N/5C)")

    hp = ap.add_argument_group("hyperparameters")
    hp.add_argument("--lambda", dest="lam", type=_number)
    hp.add_argument("--alpha", type=float)
    hp.add_argument("--steps", type=int)
    hp.add_argument("--grid-lambda", type=parse_log_grid, default=())
    hp.add_argument("--grid-alpha", type=parse_float_list, default=())
    hp.add_argument("--grid-steps", type=parse_int_list, default=())
    hp.add_argument("--preset", action="store_true",
                    help="fill unset hyperparameters from the bundled presets: search grids for "
                         "classify and sweep, the tuned cell and scaling for cluster and robustness "
                         "on --dataset")
    hp.add_argument("--restarts", type=int, default=experiments.DEFAULT_RESTARTS,
                    help="k-means restarts")

    run = ap.add_argument_group("run")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--repeats", type=int)
    run.add_argument("--sweep-target", choices=("classify", "cluster"), default="classify")
    run.add_argument("--noise", choices=experiments.NOISES, action="append")
    run.add_argument("--intensity", type=parse_float_list)
    run.add_argument("--out-dir")
    run.add_argument("--dump-affinity", action="store_true", help="also write the dense affinity CSV")
    run.add_argument("-v", "--verbose", action="store_true")
    return ap


def config_from_args(args) -> RunConfig:
    label_col = None if args.no_labels else args.labels_col
    if isinstance(label_col, str) and label_col.lstrip("-").isdigit():
        label_col = int(label_col)
    if args.edge_list is not None and args.knn is not None:
        raise ConfigError("give exactly one graph source: --edge-list or --knn")
    scale, lam, alpha, steps = args.scale, args.lam, args.alpha, args.steps
    grids = [args.grid_lambda, args.grid_alpha, args.grid_steps]
    if args.preset:
        if args.task in ("cluster", "robustness"):
            if args.dataset is None:
                raise ConfigError(f"--preset for {args.task} needs a bundled --dataset")
            tuned = presets.CLUSTER_PRESETS[args.dataset]
            scale = scale or tuned["scale"]
            if not any(grids):
                lam = tuned["lam"] if lam is None else lam
                alpha = tuned["alpha"] if alpha is None else alpha
                steps = tuned["steps"] if steps is None else steps
        else:
            defaults = (presets.CLASSIFY_LAMBDAS, presets.CLASSIFY_ALPHAS, presets.CLASSIFY_STEPS)
            fixed = (lam, alpha, steps)
            grids = [g or (() if f is not None else d) for g, f, d in zip(grids, fixed, defaults)]
    repeats = args.repeats
    if repeats is None:
        # random stratified splits are averaged over 30 runs; a fixed split file runs once
        split_based = args.task == "classify" or (args.task == "sweep" and args.sweep_target == "classify")
        repeats = 30 if split_based and args.split_file is None else 1
    cfg = RunConfig(
        task=args.task,
        dataset=args.dataset,
        features=args.features,
        label_column=label_col,
        has_header=not args.no_header,
        edge_list=args.edge_list,
        knn=None if args.edge_list else (args.knn if args.knn is not None else "auto"),
        scale=scale or "minmax",
        lam=lam,
        alpha=alpha,
        steps=steps,
        grid_lambda=grids[0],
        grid_alpha=grids[1],
        grid_steps=grids[2],
        seed=args.seed,
        repeats=repeats,
        split_file=args.split_file,
        labeled_fraction=args.labeled_fraction,
        clusters=args.clusters,
        restarts=args.restarts,
        noise=tuple(args.noise) if args.noise else experiments.NOISES,
        intensities=args.intensity if args.intensity else experiments.presets.NOISE_INTENSITIES,
        sweep_target=args.sweep_target,
        out_dir=args.out_dir,
        dump_affinity=args.dump_affinity,
    )
    return cfg.validate()


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


# Wall-clock measurements go to the CSV tables only, so that records.jsonl is
# byte-identical across reruns with the same seed.
VOLATILE_FIELDS = frozenset({"time_s"})


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            clean = {k: _jsonable(v) for k, v in rec.items() if k not in VOLATILE_FIELDS}
            fh.write(json.dumps(clean, sort_keys=True) + "\n")


def write_csv(path, records, columns=None):
    columns = columns or sorted({k for r in records for k in r})
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for rec in records:
            w.writerow({k: _jsonable(rec.get(k)) for k in columns})


def execute(cfg: RunConfig):
    """Run the configured task, write outputs, return the records."""
    labels = affinity = None
    if cfg.task == "cluster":
        records, labels, affinity = experiments.run_cluster(cfg, keep_labels=True)
    else:
        records = experiments.RUNNERS[cfg.task](cfg)
    if cfg.out_dir:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_jsonl(out / "records.jsonl", records)
        if cfg.task == "classify":
            write_csv(out / "results.csv", [r for r in records if r["record"] == "run"],
                      ["dataset", "repeat", "split_seed", "lambda", "alpha", "K", "k", "val_acc", "test_acc"])
        elif cfg.task == "cluster":
            write_csv(out / "results.csv", [r for r in records if r["record"] == "run"],
                      ["dataset", "repeat", "seed", "lambda", "alpha", "K", "k", "acc", "nmi"])
            with open(out / "assignments.csv", "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["node_id", "cluster_id"])
                w.writerows((i, int(c)) for i, c in enumerate(labels))
            if cfg.dump_affinity:
                np.savetxt(out / "affinity.csv", affinity, delimiter=",", fmt="%.10g")
        elif cfg.task == "sweep":
            write_csv(out / "sweep.csv", records,
                      ["scheme", "alpha", "K", "lambda", "metric", "value", "std", "time_s"])
        elif cfg.task == "robustness":
            write_csv(out / "robustness.csv", records,
                      ["noise", "intensity", "lambda", "alpha", "K", "acc", "acc_std", "nmi", "nmi_std"])
    return records


def _summarize(records):
    for rec in records:
        if rec.get("record") in ("summary", "cell"):
            keys = [k for k in ("scheme", "noise", "intensity", "K", "lambda", "alpha",
                                "test_acc_mean", "test_acc_std", "acc_mean", "nmi_mean",
                                "value", "acc", "nmi") if k in rec]
            print("  ".join(f"{k}={rec[k]:.4g}" if isinstance(rec[k], float) else f"{k}={rec[k]}"
                            for k in keys))


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
        records = execute(cfg)
    except (ConfigError, InputError, OSError) as exc:
        print(f"flgc: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"flgc: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _summarize(records)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
