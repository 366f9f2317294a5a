"""Command-line entry point.

Subcommands: validate, splits, train, evaluate, shuffle-table, heatmap,
gradcheck, synth. Exit codes: 0 success, 1 usage error, 2 data error. The
TEMPORAL_PROBE_RUNS_DIR environment variable overrides the output root used
by ``train``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .analysis import export_heatmap, make_heatmap_pair, similarity_alignment
from .data import DatasetError, generate_splits, load_dataset, save_dataset
from .harness import ExperimentConfig, run_experiment
from .metrics import evaluate_video, results_to_csv, threshold_fraction
from .models import ScorerConfig, build_model, load_weights
from .nn.gradcheck import finite_diff_check, max_relative_error
from .nn.layers import mse_loss
from .perturb import similarity_table
from .seeding import rng_for
from . import synth as synth_mod


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 instead of argparse's default 2
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="temporal-probe",
                     description="Frame-importance scoring, temporal perturbations, "
                                 "and rank-correlation evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="load a dataset directory and check every invariant")
    p.add_argument("dataset")

    p = sub.add_parser("splits", help="print the cross-validation plan for a dataset")
    p.add_argument("dataset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--permutations", type=int, default=3)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--out", help="also write the plan as JSON")

    p = sub.add_parser("train", help="run a full experiment from a JSON config")
    p.add_argument("config")
    p.add_argument("--jobs", type=int, default=1, help="parallel fold workers")
    p.add_argument("--out", help="run directory (default <runs-root>/<name>)")

    p = sub.add_parser("evaluate", help="score a dataset with saved weights")
    p.add_argument("weights", help="path to the .weights.json index")
    p.add_argument("dataset")
    p.add_argument("--threshold", type=float, default=0.15)
    p.add_argument("--out", help="write per-video results CSV here")

    p = sub.add_parser("shuffle-table",
                       help="Levenshtein similarity of each shuffle strategy")
    p.add_argument("dataset")
    p.add_argument("--iterations", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--level", choices=["shot", "frame"], default="shot")
    p.add_argument("--segments", type=int, default=4)
    p.add_argument("--window", type=int, default=3)

    p = sub.add_parser("heatmap", help="export similarity/importance heatmaps for one video")
    p.add_argument("dataset")
    p.add_argument("--video", required=True)
    p.add_argument("--out", default=".")

    p = sub.add_parser("gradcheck", help="finite-difference check of a model's gradients")
    p.add_argument("config", help="experiment config or bare model config JSON")
    p.add_argument("--frames", type=int, default=8)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("synth", help="emit a planted synthetic dataset")
    p.add_argument("kind", choices=list(synth_mod.KINDS))
    p.add_argument("--out", required=True)
    p.add_argument("--videos", type=int)
    p.add_argument("--frames", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--seed", type=int)
    return parser


def _runs_root() -> Path:
    return Path(os.environ.get("TEMPORAL_PROBE_RUNS_DIR", "runs"))


def _cmd_validate(args) -> int:
    dataset = load_dataset(args.dataset)
    frames = sum(v.n_frames for v in dataset.videos)
    print(f"ok: {dataset.name} ({dataset.style}), {len(dataset.videos)} videos, "
          f"{frames} frames, D={dataset.feature_dim}, sample_rate={dataset.sample_rate}")
    return 0


def _cmd_splits(args) -> int:
    dataset = load_dataset(args.dataset)
    plan = generate_splits(dataset, args.seed, args.permutations, args.folds)
    payload = plan.to_json()
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
    for p, perm in enumerate(plan.assignments):
        for f, fold in enumerate(perm):
            print(f"permutation {p} fold {f}: train={len(fold.train)} test={len(fold.test)}")
    return 0


def _load_experiment_config(path: str) -> ExperimentConfig:
    config_path = Path(path)
    if not config_path.is_file():
        raise _UsageError(f"config file not found: {config_path}")
    try:
        return ExperimentConfig.from_json(json.loads(config_path.read_text()))
    except (KeyError, ValueError, TypeError) as exc:
        raise _UsageError(f"invalid experiment config: {exc}") from exc


def _cmd_train(args) -> int:
    config = _load_experiment_config(args.config)
    out_dir = Path(args.out) if args.out else _runs_root() / config.name
    report = run_experiment(config, jobs=args.jobs, out_dir=out_dir)
    print(f"aggregate kendall {report.aggregate_kendall:.4f} "
          f"spearman {report.aggregate_spearman:.4f} "
          f"({len(report.folds)} folds, {report.wall_clock_seconds:.1f}s)")
    print(f"outputs in {out_dir}")
    return 0


def _cmd_evaluate(args) -> int:
    index_path = Path(args.weights)
    if not index_path.is_file():
        raise _UsageError(f"weights index not found: {index_path}")
    model = load_weights(index_path)
    dataset = load_dataset(args.dataset)
    if dataset.feature_dim != model.config.input_dim:
        raise DatasetError(f"dataset D={dataset.feature_dim} does not match model "
                           f"input_dim={model.config.input_dim}")
    results = [evaluate_video(model.score_frames(v.features), v, dataset.style)
               for v in dataset.videos]
    taus = [r.kendall for r in results]
    print(f"videos {len(results)}  mean kendall {np.mean(taus):.4f}  "
          f"mean spearman {np.mean([r.spearman for r in results]):.4f}")
    frac = threshold_fraction(results, args.threshold)
    print(f"fraction with kendall >= {args.threshold:g}: {frac:.2f}")
    if args.out:
        results_to_csv(results, args.out)
    return 0


def _cmd_shuffle_table(args) -> int:
    dataset = load_dataset(args.dataset)
    rows = similarity_table(dataset, iterations=args.iterations, seed=args.seed,
                            level=args.level, segment_count=args.segments,
                            window=args.window)
    width = max(len(label) for label, _, _ in rows) + 2
    print(f"{'Shuffle type'.ljust(width)}{'Iterations':>12}{'Similarity (0-100)':>20}")
    for label, iters, value in rows:
        print(f"{label.ljust(width)}{iters:>12}{value:>20.2f}")
    return 0


def _cmd_heatmap(args) -> int:
    dataset = load_dataset(args.dataset)
    try:
        record = dataset.video(args.video)
    except KeyError:
        raise DatasetError(f"video {args.video!r} not in dataset {dataset.name}")
    pair = make_heatmap_pair(record)
    paths = export_heatmap(pair, args.out)
    print(f"alignment(similarity, -importance-difference) = {similarity_alignment(pair):.4f}")
    for path in paths:
        print(path)
    return 0


def _cmd_gradcheck(args) -> int:
    config_path = Path(args.config)
    if not config_path.is_file():
        raise _UsageError(f"config file not found: {config_path}")
    obj = json.loads(config_path.read_text())
    model_obj = obj["model"] if "model" in obj else obj
    try:
        config = ScorerConfig.from_json(model_obj)
    except (KeyError, ValueError, TypeError) as exc:
        raise _UsageError(f"invalid model config: {exc}") from exc
    model = build_model(config, seed=args.seed)
    rng = rng_for(args.seed, 99)
    x = rng.normal(size=(args.frames, config.input_dim))
    target = rng.uniform(0.2, 0.8, size=args.frames)

    def loss_fn():
        loss, dpred = mse_loss(model.score_frames(x), target)
        model.backward(dpred)
        return loss

    reports = finite_diff_check(loss_fn, model.parameters(), seed=args.seed)
    for r in reports:
        status = "ok" if r.max_rel_error < args.tolerance else "FAIL"
        print(f"{r.name:24s} max_rel_error {r.max_rel_error:.3e} ({r.checked} coords) {status}")
    worst = max_relative_error(reports)
    print(f"worst {worst:.3e} tolerance {args.tolerance:g}")
    return 0 if worst < args.tolerance else 1


def _cmd_synth(args) -> int:
    kwargs = {}
    for key in ("videos", "frames", "dim", "seed", "noise"):
        value = getattr(args, key)
        if value is not None:
            kwargs[key] = value
    if args.kind == synth_mod.CONTENT and "noise" in kwargs:
        raise _UsageError("--noise only applies to the position kind")
    dataset = synth_mod.make_dataset(args.kind, **kwargs)
    save_dataset(dataset, args.out)
    print(f"wrote {args.kind} dataset: {len(dataset.videos)} videos, "
          f"D={dataset.feature_dim} at {args.out}")
    return 0


_HANDLERS = {
    "validate": _cmd_validate,
    "splits": _cmd_splits,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "shuffle-table": _cmd_shuffle_table,
    "heatmap": _cmd_heatmap,
    "gradcheck": _cmd_gradcheck,
    "synth": _cmd_synth,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _HANDLERS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DatasetError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
