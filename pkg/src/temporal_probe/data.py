"""Dataset loading, validation, ground-truth construction, shot-boundary
remapping, and cross-validation split generation.

Dataset directory format (written by ``save_dataset`` and by the archive
converter, read by ``load_dataset``):

    manifest.json   {"name", "style", "feature_dim", "sample_rate",
                     "videos": [id, ...]}
    <id>.feat       16-byte header: magic b"TPFT", version u32, N u32, D u32
                    (little-endian), then N*D little-endian float32 values,
                    row-major.
    <id>.ann.json   {"annotator_scores": A x N nested lists,
                     "shot_boundaries_original": [[start, end], ...]}
                    with boundaries as inclusive original-frame-rate indices.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .seeding import SPLITS, rng_for

TVSUM_STYLE = "tvsum_style"
SUMME_STYLE = "summe_style"
STYLES = (TVSUM_STYLE, SUMME_STYLE)

# Raw annotation scale per style; ground truth is rescaled to [0, 1].
SCALE_BOUNDS = {TVSUM_STYLE: (1.0, 5.0), SUMME_STYLE: (0.0, 1.0)}

FEAT_MAGIC = b"TPFT"
FEAT_VERSION = 1
_FEAT_HEADER = struct.Struct("<4sIII")


class DatasetError(ValueError):
    """Malformed dataset content, carrying the offending video and field."""

    def __init__(self, message: str, *, video_id: str | None = None, field: str | None = None):
        parts = []
        if video_id is not None:
            parts.append(f"video {video_id!r}")
        if field is not None:
            parts.append(f"field {field!r}")
        prefix = f"[{', '.join(parts)}] " if parts else ""
        super().__init__(prefix + message)
        self.video_id = video_id
        self.field = field


@dataclass(frozen=True)
class VideoRecord:
    """One video: subsampled features, raw annotator scores, derived ground
    truth, and shot structure. Arrays are read-only after load."""

    id: str
    features: np.ndarray            # (N, D) float32
    annotator_scores: np.ndarray    # (A, N) float64, raw scale per style
    ground_truth: np.ndarray        # (N,) float64 in [0, 1]
    shot_boundaries_original: tuple[tuple[int, int], ...]
    shot_ids: np.ndarray            # (N,) int64, non-decreasing from 0
    sample_rate: int

    @property
    def n_frames(self) -> int:
        return self.features.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @property
    def n_annotators(self) -> int:
        return self.annotator_scores.shape[0]


@dataclass(frozen=True)
class Dataset:
    name: str
    style: str
    videos: tuple[VideoRecord, ...]
    sample_rate: int

    @property
    def feature_dim(self) -> int:
        return self.videos[0].feature_dim

    def video(self, video_id: str) -> VideoRecord:
        for v in self.videos:
            if v.id == video_id:
                return v
        raise KeyError(video_id)


@dataclass(frozen=True)
class FoldSplit:
    train: tuple[str, ...]
    test: tuple[str, ...]


@dataclass(frozen=True)
class SplitPlan:
    seed: int
    permutation_count: int
    folds: int
    # assignments[permutation][fold] -> FoldSplit
    assignments: tuple[tuple[FoldSplit, ...], ...]

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "permutations": self.permutation_count,
            "folds": self.folds,
            "assignments": [
                [{"train": list(f.train), "test": list(f.test)} for f in perm]
                for perm in self.assignments
            ],
        }

    @staticmethod
    def from_json(obj: dict) -> "SplitPlan":
        assignments = tuple(
            tuple(FoldSplit(tuple(f["train"]), tuple(f["test"])) for f in perm)
            for perm in obj["assignments"]
        )
        return SplitPlan(int(obj["seed"]), int(obj["permutations"]), int(obj["folds"]), assignments)


def compute_ground_truth(annotator_scores: np.ndarray, style: str) -> np.ndarray:
    """Per-frame mean over annotators, rescaled to [0, 1].

    tvsum_style scores live on [1, 5] and are mapped through (s - 1) / 4
    before averaging; summe_style scores are already on [0, 1].
    """
    scores = np.asarray(annotator_scores, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[0] < 1:
        raise ValueError("annotator_scores must be a non-empty A x N matrix")
    _check_scale(scores, style)
    if style == TVSUM_STYLE:
        scores = (scores - 1.0) / 4.0
    return scores.mean(axis=0)


def _check_scale(scores: np.ndarray, style: str) -> None:
    if style not in STYLES:
        raise ValueError(f"unknown dataset style {style!r}")
    lo, hi = SCALE_BOUNDS[style]
    if scores.size and (scores.min() < lo or scores.max() > hi):
        raise ValueError(f"scores outside {style} scale [{lo}, {hi}]")


def validate_boundaries(boundaries) -> tuple[tuple[int, int], ...]:
    """Check boundaries are sorted, non-overlapping, contiguous from 0."""
    if len(boundaries) == 0:
        raise ValueError("empty shot boundary list")
    cleaned = []
    expected_start = 0
    for start, end in boundaries:
        start, end = int(start), int(end)
        if start != expected_start:
            raise ValueError(
                f"boundary ({start}, {end}) not contiguous: expected start {expected_start}"
            )
        if end < start:
            raise ValueError(f"boundary ({start}, {end}) ends before it starts")
        cleaned.append((start, end))
        expected_start = end + 1
    return tuple(cleaned)


def map_shots_to_subsampled(boundaries, n_subsampled: int, sample_rate: int) -> np.ndarray:
    """Assign each subsampled frame to the shot whose original-rate interval
    contains index i * sample_rate; indices beyond the last boundary clamp to
    the last shot."""
    bounds = validate_boundaries(boundaries)
    if n_subsampled < 1:
        raise ValueError("need at least one subsampled frame")
    ends = np.array([e for _, e in bounds], dtype=np.int64)
    original = np.arange(n_subsampled, dtype=np.int64) * int(sample_rate)
    ids = np.searchsorted(ends, original, side="left")
    return np.minimum(ids, len(bounds) - 1).astype(np.int64)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


def make_video_record(
    video_id: str,
    features: np.ndarray,
    annotator_scores: np.ndarray,
    shot_boundaries_original,
    sample_rate: int,
    style: str,
) -> VideoRecord:
    """Build a validated record; ground truth and shot ids are derived here."""
    features = np.asarray(features)
    if features.ndim != 2 or features.shape[0] < 1 or features.shape[1] < 1:
        raise DatasetError("features must be a non-empty N x D matrix",
                           video_id=video_id, field="features")
    features = features.astype(np.float32, copy=False)
    scores = np.asarray(annotator_scores, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[0] < 1:
        raise DatasetError("annotator_scores must be a non-empty A x N matrix",
                           video_id=video_id, field="annotator_scores")
    if scores.shape[1] != features.shape[0]:
        raise DatasetError(
            f"annotator_scores length {scores.shape[1]} != frame count {features.shape[0]}",
            video_id=video_id, field="annotator_scores")
    try:
        _check_scale(scores, style)
    except ValueError as exc:
        raise DatasetError(str(exc), video_id=video_id, field="annotator_scores") from exc
    try:
        bounds = validate_boundaries(shot_boundaries_original)
        shot_ids = map_shots_to_subsampled(bounds, features.shape[0], sample_rate)
    except ValueError as exc:
        raise DatasetError(str(exc), video_id=video_id,
                           field="shot_boundaries_original") from exc
    ground_truth = compute_ground_truth(scores, style)
    return VideoRecord(
        id=video_id,
        features=_freeze(features),
        annotator_scores=_freeze(scores),
        ground_truth=_freeze(ground_truth),
        shot_boundaries_original=bounds,
        shot_ids=_freeze(shot_ids),
        sample_rate=int(sample_rate),
    )


def _read_feat(path: Path, video_id: str, expected_dim: int) -> np.ndarray:
    if not path.is_file():
        raise DatasetError("feature file missing", video_id=video_id, field="features")
    raw = path.read_bytes()
    if len(raw) < _FEAT_HEADER.size:
        raise DatasetError("feature file shorter than header", video_id=video_id, field="features")
    magic, version, n, d = _FEAT_HEADER.unpack_from(raw)
    if magic != FEAT_MAGIC:
        raise DatasetError(f"bad magic {magic!r}", video_id=video_id, field="features")
    if version != FEAT_VERSION:
        raise DatasetError(f"unsupported version {version}", video_id=video_id, field="features")
    if d != expected_dim:
        raise DatasetError(f"feature dimension {d} != manifest dimension {expected_dim}",
                           video_id=video_id, field="features")
    payload = raw[_FEAT_HEADER.size:]
    if len(payload) != 4 * n * d:
        raise DatasetError(
            f"payload holds {len(payload) // 4} floats, header promises {n * d}",
            video_id=video_id, field="features")
    return np.frombuffer(payload, dtype="<f4").reshape(n, d)


def write_feat(path: Path, features: np.ndarray) -> None:
    features = np.ascontiguousarray(features, dtype="<f4")
    n, d = features.shape
    path.write_bytes(_FEAT_HEADER.pack(FEAT_MAGIC, FEAT_VERSION, n, d) + features.tobytes())


def load_dataset(path) -> Dataset:
    """Load and fully validate a dataset directory; raises DatasetError with
    the offending video id and field on the first malformed file."""
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise DatasetError(f"missing manifest at {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    for key in ("name", "style", "feature_dim", "sample_rate", "videos"):
        if key not in manifest:
            raise DatasetError(f"manifest missing key {key!r}")
    style = manifest["style"]
    if style not in STYLES:
        raise DatasetError(f"unknown style {style!r} in manifest")
    dim = int(manifest["feature_dim"])
    sample_rate = int(manifest["sample_rate"])
    if dim < 1 or sample_rate < 1:
        raise DatasetError("feature_dim and sample_rate must be positive")
    ids = list(manifest["videos"])
    if len(set(ids)) != len(ids):
        raise DatasetError("manifest lists duplicate video ids")

    videos = []
    for video_id in manifest["videos"]:
        features = _read_feat(root / f"{video_id}.feat", video_id, dim)
        ann_path = root / f"{video_id}.ann.json"
        if not ann_path.is_file():
            raise DatasetError("annotation file missing", video_id=video_id,
                               field="annotator_scores")
        ann = json.loads(ann_path.read_text())
        for key in ("annotator_scores", "shot_boundaries_original"):
            if key not in ann:
                raise DatasetError(f"annotation missing key {key!r}",
                                   video_id=video_id, field=key)
        videos.append(make_video_record(
            video_id, features, np.array(ann["annotator_scores"], dtype=np.float64),
            ann["shot_boundaries_original"], sample_rate, style))
    return Dataset(name=manifest["name"], style=style, videos=tuple(videos),
                   sample_rate=sample_rate)


def save_dataset(dataset: Dataset, path) -> Path:
    """Write a dataset directory in the toolkit format. Round-trips bit-exactly."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    manifest = {
        "name": dataset.name,
        "style": dataset.style,
        "feature_dim": dataset.feature_dim,
        "sample_rate": dataset.sample_rate,
        "videos": [v.id for v in dataset.videos],
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    for v in dataset.videos:
        write_feat(root / f"{v.id}.feat", v.features)
        ann = {
            "annotator_scores": v.annotator_scores.tolist(),
            "shot_boundaries_original": [list(b) for b in v.shot_boundaries_original],
        }
        (root / f"{v.id}.ann.json").write_text(json.dumps(ann) + "\n")
    return root


def generate_splits(dataset: Dataset, seed: int, permutations: int = 3, folds: int = 5) -> SplitPlan:
    """Deterministic cross-validation plan: per permutation, video ids are
    shuffled with a seeded generator and dealt round-robin into test folds."""
    if folds < 2:
        raise ValueError("need at least 2 folds")
    ids = [v.id for v in dataset.videos]
    if len(ids) < folds:
        raise ValueError(f"dataset has {len(ids)} videos, fewer than {folds} folds")
    perms = []
    for p in range(permutations):
        rng = rng_for(seed, SPLITS, p)
        order = [ids[i] for i in rng.permutation(len(ids))]
        fold_splits = []
        for f in range(folds):
            test = set(order[f::folds])
            fold_splits.append(FoldSplit(
                train=tuple(i for i in ids if i not in test),
                test=tuple(i for i in ids if i in test),
            ))
        perms.append(tuple(fold_splits))
    return SplitPlan(seed=seed, permutation_count=permutations, folds=folds,
                     assignments=tuple(perms))
