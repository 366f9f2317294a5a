"""Experiment orchestration: the two training paradigms, per-epoch test
evaluation with best-epoch recording, cross-validation runs, and report
aggregation into comparison tables.

The test split is never permuted: evaluation goes through
``evaluate_on_videos``, which has no access to the shuffle configuration.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset, FoldSplit, VideoRecord, generate_splits, load_dataset
from .metrics import VideoEvalResult, evaluate_video, results_to_csv
from .models import (
    ATTENTION,
    MLP,
    ScorerConfig,
    ScorerModel,
    build_model,
    model_label,
    save_weights,
)
from .nn.layers import mse_loss
from .nn.optim import adam_step, clip_grad_norm
from .perturb import (
    FIXED_SEGMENT,
    FLIP,
    ShuffleSpec,
    apply_permutation,
    generate_permutation,
    sample_augmentation,
)
from .seeding import AUGMENT, SHUFFLE, TRAIN, combine_seed, rng_for

INVARIANT = "invariant_frame_batch"
FULL_VIDEO = "full_video"
PARADIGMS = (INVARIANT, FULL_VIDEO)

# Canonical table row order; unknown labels append after these.
ROW_ORDER = ("unshuffled", FIXED_SEGMENT, FLIP, "intra_shot", "neighbour_shot", "any_shot")


@dataclass(frozen=True)
class AugmentationSpec:
    p: float = 0.5
    strategies: tuple[str, ...] = (FLIP, FIXED_SEGMENT)
    segment_count: int = 4

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("augmentation probability must lie in [0, 1]")
        if not self.strategies:
            raise ValueError("need at least one augmentation strategy")

    def to_json(self) -> dict:
        return {"p": self.p, "strategies": list(self.strategies),
                "segment_count": self.segment_count}

    @staticmethod
    def from_json(obj: dict) -> "AugmentationSpec":
        return AugmentationSpec(
            p=float(obj.get("p", 0.5)),
            strategies=tuple(obj.get("strategies", [FLIP, FIXED_SEGMENT])),
            segment_count=int(obj.get("segment_count", 4)),
        )


@dataclass(frozen=True)
class SplitSettings:
    seed: int = 0
    permutations: int = 3
    folds: int = 5

    def to_json(self) -> dict:
        return {"seed": self.seed, "permutations": self.permutations, "folds": self.folds}

    @staticmethod
    def from_json(obj: dict) -> "SplitSettings":
        return SplitSettings(seed=int(obj.get("seed", 0)),
                             permutations=int(obj.get("permutations", 3)),
                             folds=int(obj.get("folds", 5)))


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    dataset: str
    model: ScorerConfig
    paradigm: str
    shuffle: ShuffleSpec | None = None
    augmentation: AugmentationSpec | None = None
    epochs: int = 50
    lr: float = 5e-5
    weight_decay: float = 1e-5
    clip_norm: float = 3.0
    batch_size: int | None = None    # None -> 128 invariant, 1 full_video
    fixed_per_video: bool = False
    splits: SplitSettings = field(default_factory=SplitSettings)

    def __post_init__(self):
        if self.paradigm not in PARADIGMS:
            raise ValueError(f"unknown paradigm {self.paradigm!r}")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.lr < 0 or self.weight_decay < 0:
            raise ValueError("lr and weight_decay must be non-negative")
        if self.clip_norm <= 0:
            raise ValueError("clip_norm must be positive")
        if self.batch_size is None:
            object.__setattr__(self, "batch_size", 128 if self.paradigm == INVARIANT else 1)
        if self.paradigm == FULL_VIDEO and self.batch_size != 1:
            raise ValueError("full_video paradigm trains one video per step (batch_size 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.paradigm == INVARIANT:
            if self.shuffle is not None or self.augmentation is not None:
                raise ValueError("shuffle/augmentation only apply to full_video training")
            order_blind = self.model.kind == MLP or (
                self.model.kind == ATTENTION and not self.model.use_positional_encoding)
            if not order_blind:
                raise ValueError("invariant paradigm needs an order-blind model "
                                 "(mlp or attention without positional encoding)")
        if self.shuffle is not None and self.augmentation is not None:
            raise ValueError("shuffle and augmentation are mutually exclusive")

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "dataset": self.dataset,
            "model": self.model.to_json(),
            "paradigm": self.paradigm,
            "shuffle": self.shuffle.to_json() if self.shuffle else None,
            "augmentation": self.augmentation.to_json() if self.augmentation else None,
            "epochs": self.epochs,
            "lr": self.lr,
            "weight_decay": self.weight_decay,
            "clip_norm": self.clip_norm,
            "batch_size": self.batch_size,
            "fixed_per_video": self.fixed_per_video,
            "splits": self.splits.to_json(),
        }

    @staticmethod
    def from_json(obj: dict) -> "ExperimentConfig":
        return ExperimentConfig(
            name=obj["name"],
            dataset=obj["dataset"],
            model=ScorerConfig.from_json(obj["model"]),
            paradigm=obj["paradigm"],
            shuffle=ShuffleSpec.from_json(obj["shuffle"]) if obj.get("shuffle") else None,
            augmentation=(AugmentationSpec.from_json(obj["augmentation"])
                          if obj.get("augmentation") else None),
            epochs=int(obj.get("epochs", 50)),
            lr=float(obj.get("lr", 5e-5)),
            weight_decay=float(obj.get("weight_decay", 1e-5)),
            clip_norm=float(obj.get("clip_norm", 3.0)),
            batch_size=obj.get("batch_size"),
            fixed_per_video=bool(obj.get("fixed_per_video", False)),
            splits=SplitSettings.from_json(obj.get("splits", {})),
        )


def run_label(config: ExperimentConfig) -> str:
    if config.shuffle is not None:
        return config.shuffle.strategy
    if config.augmentation is not None:
        return f"augmented(p={config.augmentation.p:g})"
    return "unshuffled"


def _update(model: ScorerModel, pred, target, config: ExperimentConfig) -> float:
    loss, dpred = mse_loss(pred, target)
    model.backward(dpred)
    clip_grad_norm([p for _, p in model.parameters()], config.clip_norm)
    for _, p in model.parameters():
        adam_step(p, config.lr, weight_decay=config.weight_decay)
    return loss


def train_invariant(videos, model: ScorerModel, config: ExperimentConfig,
                    seed: int, on_epoch=None) -> ScorerModel:
    """Order-destroying paradigm: each step draws batch_size (frame, target)
    pairs uniformly (with replacement) from the pooled frames of every
    training video. One epoch is ceil(pool / batch_size) steps."""
    videos = list(videos)
    if not videos:
        raise ValueError("empty training set")
    rng = rng_for(seed, TRAIN)
    pool_x = np.concatenate([v.features for v in videos], axis=0)
    pool_y = np.concatenate([v.ground_truth for v in videos], axis=0)
    steps = math.ceil(pool_x.shape[0] / config.batch_size)
    for epoch in range(config.epochs):
        for _ in range(steps):
            idx = rng.integers(0, pool_x.shape[0], size=config.batch_size)
            pred = model.score_frames(pool_x[idx], train_mode=True, rng=rng)
            _update(model, pred, pool_y[idx], config)
        if on_epoch is not None:
            on_epoch(epoch, model)
    return model


def _permutation_for(video: VideoRecord, spec: ShuffleSpec, seed: int):
    return generate_permutation(spec.reseeded(seed), video.n_frames, video.shot_ids)


def train_full_video(videos, model: ScorerModel, config: ExperimentConfig,
                     seed: int, on_epoch=None) -> ScorerModel:
    """Sequence paradigm: one whole video per step. Shuffle specs resample a
    fresh permutation per (video, epoch) unless fixed_per_video is set;
    augmentation draws its strategy per (video, epoch). Both consume their
    own seed streams so disabling them leaves training untouched."""
    videos = list(videos)
    if not videos:
        raise ValueError("empty training set")
    rng = rng_for(seed, TRAIN)
    rng_shuffle = rng_for(seed, SHUFFLE)
    rng_augment = rng_for(seed, AUGMENT)

    fixed_perms = None
    if config.shuffle is not None and config.fixed_per_video:
        fixed_perms = [
            _permutation_for(v, config.shuffle, int(rng_shuffle.integers(1 << 62)))
            for v in videos
        ]

    for epoch in range(config.epochs):
        order = rng.permutation(len(videos))
        for vi in order:
            video = videos[vi]
            if config.shuffle is not None:
                if fixed_perms is not None:
                    perm = fixed_perms[vi]
                else:
                    perm = _permutation_for(video, config.shuffle,
                                            int(rng_shuffle.integers(1 << 62)))
                video = apply_permutation(video, perm)
            elif config.augmentation is not None:
                aug = config.augmentation
                perm = sample_augmentation(
                    int(rng_augment.integers(1 << 62)), aug.p, video.n_frames,
                    video.shot_ids, segment_count=aug.segment_count,
                    strategies=aug.strategies)
                if not perm.is_identity():
                    video = apply_permutation(video, perm)
            pred = model.score_frames(video.features, train_mode=True, rng=rng)
            _update(model, pred, video.ground_truth, config)
        if on_epoch is not None:
            on_epoch(epoch, model)
    return model


def evaluate_on_videos(model: ScorerModel, videos, style: str):
    """Mean test correlations plus per-video results. Pure function of the
    model and the (clean) videos; shuffle configs cannot reach this path."""
    results = [evaluate_video(model.score_frames(v.features), v, style) for v in videos]
    mean_tau = float(np.mean([r.kendall for r in results]))
    mean_rho = float(np.mean([r.spearman for r in results]))
    return mean_tau, mean_rho, results


@dataclass
class FoldResult:
    permutation: int
    fold: int
    best_epoch: int
    best_kendall: float
    best_spearman: float
    video_results: list[VideoEvalResult]
    best_weights: list[np.ndarray] | None = None

    def to_json(self) -> dict:
        return {
            "permutation": self.permutation,
            "fold": self.fold,
            "best_epoch": self.best_epoch,
            "best_kendall": self.best_kendall,
            "best_spearman": self.best_spearman,
            "videos": [
                {"video_id": r.video_id, "kendall": r.kendall,
                 "spearman": r.spearman, "degenerate": r.degenerate}
                for r in self.video_results
            ],
        }


@dataclass
class RunReport:
    config: ExperimentConfig
    dataset_name: str
    folds: list[FoldResult]
    aggregate_kendall: float
    aggregate_spearman: float
    wall_clock_seconds: float

    def to_json(self) -> dict:
        return {
            "config": self.config.to_json(),
            "dataset_name": self.dataset_name,
            "aggregate_kendall": self.aggregate_kendall,
            "aggregate_spearman": self.aggregate_spearman,
            "wall_clock_seconds": self.wall_clock_seconds,
            "folds": [f.to_json() for f in self.folds],
        }


def run_fold(dataset: Dataset, split: FoldSplit, config: ExperimentConfig,
             permutation: int, fold: int, keep_weights: bool = True) -> FoldResult:
    """Train on the fold's train videos, evaluate on its (never shuffled)
    test videos after every epoch, and keep the epoch with the best mean
    kendall correlation."""
    train_videos = [dataset.video(i) for i in split.train]
    test_videos = [dataset.video(i) for i in split.test]
    seed = combine_seed(config.splits.seed, permutation, fold)
    model = build_model(config.model, seed)

    best = {"epoch": -1, "kendall": -np.inf, "spearman": 0.0, "results": [],
            "weights": None}

    def after_epoch(epoch: int, m: ScorerModel) -> None:
        tau, rho, results = evaluate_on_videos(m, test_videos, dataset.style)
        if tau > best["kendall"]:
            best.update(epoch=epoch, kendall=tau, spearman=rho, results=results)
            if keep_weights:
                best["weights"] = [p.value.copy() for _, p in m.parameters()]

    trainer = train_invariant if config.paradigm == INVARIANT else train_full_video
    trainer(train_videos, model, config, seed, on_epoch=after_epoch)
    return FoldResult(
        permutation=permutation,
        fold=fold,
        best_epoch=best["epoch"],
        best_kendall=float(best["kendall"]),
        best_spearman=float(best["spearman"]),
        video_results=best["results"],
        best_weights=best["weights"],
    )


def _fold_job(args):
    dataset, split, config, permutation, fold, keep_weights = args
    return run_fold(dataset, split, config, permutation, fold, keep_weights)


def run_experiment(config: ExperimentConfig, dataset: Dataset | None = None,
                   jobs: int = 1, out_dir: Path | None = None,
                   keep_weights: bool = True) -> RunReport:
    """Full protocol: permutations x folds independent runs, aggregated as
    the mean of per-fold best correlations. Partial fold results are flushed
    to out_dir if a fold fails."""
    if dataset is None:
        dataset = load_dataset(config.dataset)
    plan = generate_splits(dataset, config.splits.seed,
                           config.splits.permutations, config.splits.folds)
    tasks = [
        (dataset, plan.assignments[p][f], config, p, f, keep_weights)
        for p in range(plan.permutation_count)
        for f in range(plan.folds)
    ]
    start = time.perf_counter()
    folds: list[FoldResult] = []
    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                for result in pool.map(_fold_job, tasks):
                    folds.append(result)
        else:
            for task in tasks:
                folds.append(_fold_job(task))
    except Exception:
        if out_dir is not None:
            _flush_partial(folds, Path(out_dir))
        raise
    elapsed = time.perf_counter() - start
    report = RunReport(
        config=config,
        dataset_name=dataset.name,
        folds=folds,
        aggregate_kendall=float(np.mean([f.best_kendall for f in folds])),
        aggregate_spearman=float(np.mean([f.best_spearman for f in folds])),
        wall_clock_seconds=elapsed,
    )
    if out_dir is not None:
        save_run(report, Path(out_dir))
    return report


def _flush_partial(folds, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {"complete": False, "folds": [f.to_json() for f in folds]}
    (out_dir / "partial_report.json").write_text(json.dumps(payload, indent=2) + "\n")


def save_run(report: RunReport, out_dir: Path) -> Path:
    """Write report.json, per-fold scores CSVs, best weights, and a one-run
    comparison table under the run directory."""
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(json.dumps(report.to_json(), indent=2) + "\n")
    for f in report.folds:
        results_to_csv(f.video_results, out_dir / f"scores_p{f.permutation}_f{f.fold}.csv")
        if f.best_weights is not None:
            model = build_model(report.config.model, seed=0)
            for (_, p), w in zip(model.parameters(), f.best_weights):
                p.value[...] = w
            weights_dir = out_dir / "weights"
            weights_dir.mkdir(exist_ok=True)
            save_weights(model, weights_dir / f"p{f.permutation}_f{f.fold}")
    aggregate_reports([report]).to_csv(out_dir / "table.csv")
    return out_dir


@dataclass
class ComparisonTable:
    dataset_name: str
    rows: list[str]                      # shuffle labels
    columns: list[str]                   # model labels
    cells: dict[tuple[str, str], float]  # (row, column) -> aggregate kendall

    def best_rows(self) -> dict[str, str]:
        """Per column, the row label with the highest correlation."""
        out = {}
        for col in self.columns:
            filled = [(row, self.cells[(row, col)]) for row in self.rows
                      if (row, col) in self.cells]
            out[col] = max(filled, key=lambda rv: rv[1])[0]
        return out

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["shuffle", *self.columns])
            for row in self.rows:
                writer.writerow([row] + [
                    f"{self.cells[(row, col)]:.6f}" if (row, col) in self.cells else ""
                    for col in self.columns
                ])
        return path

    def to_text(self) -> str:
        """Fixed-width rendering; the best cell per column is starred."""
        best = self.best_rows()
        width = max(12, *(len(r) + 2 for r in self.rows))
        header = "shuffle".ljust(width) + "".join(c.rjust(18) for c in self.columns)
        lines = [header, "-" * len(header)]
        for row in self.rows:
            line = row.ljust(width)
            for col in self.columns:
                if (row, col) in self.cells:
                    mark = "*" if best.get(col) == row else " "
                    line += f"{self.cells[(row, col)]:.4f}{mark}".rjust(18)
                else:
                    line += "-".rjust(18)
            lines.append(line)
        return "\n".join(lines)


def aggregate_reports(reports) -> ComparisonTable:
    """Cross-run grid: rows are shuffle strategies, columns are models,
    cells the aggregate kendall correlation."""
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to aggregate")
    names = {r.dataset_name for r in reports}
    if len(names) != 1:
        raise ValueError(f"reports span different datasets: {sorted(names)}")
    cells: dict[tuple[str, str], float] = {}
    rows: list[str] = []
    columns: list[str] = []
    for r in reports:
        row = run_label(r.config)
        col = model_label(r.config.model)
        if (row, col) in cells:
            raise ValueError(f"duplicate cell for ({row}, {col})")
        cells[(row, col)] = r.aggregate_kendall
        if row not in rows:
            rows.append(row)
        if col not in columns:
            columns.append(col)
    rows.sort(key=lambda r: (ROW_ORDER.index(r) if r in ROW_ORDER else len(ROW_ORDER), r))
    return ComparisonTable(dataset_name=names.pop(), rows=rows, columns=columns, cells=cells)
