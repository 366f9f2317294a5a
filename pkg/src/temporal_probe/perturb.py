"""Temporal-order perturbations: five shuffle strategies, permutation
application, and Levenshtein-based shuffle similarity."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .data import VideoRecord
from .seeding import rng_for

FLIP = "flip"
FIXED_SEGMENT = "fixed_segment"
INTRA_SHOT = "intra_shot"
NEIGHBOUR_SHOT = "neighbour_shot"
ANY_SHOT = "any_shot"
IDENTITY = "identity"

STRATEGIES = (FLIP, FIXED_SEGMENT, INTRA_SHOT, NEIGHBOUR_SHOT, ANY_SHOT)
SHOT_STRATEGIES = (INTRA_SHOT, NEIGHBOUR_SHOT, ANY_SHOT)


@dataclass(frozen=True)
class ShuffleSpec:
    """How to perturb a sequence: strategy plus its parameters."""

    strategy: str
    segment_count: int = 4   # fixed_segment only
    window: int = 3          # neighbour_shot only
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown shuffle strategy {self.strategy!r}")
        if self.strategy == FIXED_SEGMENT and self.segment_count < 2:
            raise ValueError("fixed_segment needs segment_count >= 2")
        if self.strategy == NEIGHBOUR_SHOT and self.window < 2:
            raise ValueError("neighbour_shot needs window >= 2")

    def to_json(self) -> dict:
        return {
            "strategy": self.strategy,
            "segment_count": self.segment_count,
            "window": self.window,
            "seed": self.seed,
        }

    @staticmethod
    def from_json(obj: dict) -> "ShuffleSpec":
        return ShuffleSpec(
            strategy=obj["strategy"],
            segment_count=int(obj.get("segment_count", 4)),
            window=int(obj.get("window", 3)),
            seed=int(obj.get("seed", 0)),
        )

    def reseeded(self, seed: int) -> "ShuffleSpec":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class Permutation:
    """A bijection on frame indices: output position i takes input frame
    mapping[i]."""

    mapping: np.ndarray
    strategy: str
    params: dict = field(default_factory=dict)
    seed: int | None = None

    @property
    def n(self) -> int:
        return self.mapping.shape[0]

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.mapping, np.arange(self.n)))


def _make_permutation(mapping, strategy, params=None, seed=None) -> Permutation:
    mapping = np.asarray(mapping, dtype=np.int64)
    if not np.array_equal(np.sort(mapping), np.arange(mapping.shape[0])):
        raise ValueError(f"{strategy} produced a non-bijective mapping")
    return Permutation(mapping=mapping, strategy=strategy, params=dict(params or {}), seed=seed)


def identity_permutation(n: int) -> Permutation:
    return _make_permutation(np.arange(n), IDENTITY)


def _shot_runs(shot_ids: np.ndarray) -> list[np.ndarray]:
    """Split into contiguous index runs, validating the shot-id layout."""
    shot_ids = np.asarray(shot_ids)
    if shot_ids.ndim != 1 or shot_ids.shape[0] == 0:
        raise ValueError("shot_ids must be a non-empty vector")
    if shot_ids[0] != 0:
        raise ValueError("shot_ids must start at 0")
    steps = np.diff(shot_ids)
    if steps.size and (steps.min() < 0 or steps.max() > 1):
        raise ValueError("shot_ids must be non-decreasing with unit increments")
    cuts = np.flatnonzero(steps) + 1
    return np.split(np.arange(shot_ids.shape[0]), cuts)


def generate_permutation(spec: ShuffleSpec, n: int, shot_ids: np.ndarray | None = None) -> Permutation:
    """Sample one permutation for the given strategy.

    flip reverses the sequence; fixed_segment permutes M consecutive blocks
    (remainder frames stay in the final block); the three shot strategies
    permute frames within shots, shots within fixed windows, or shots
    globally, always keeping within-shot frame order for the latter two.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    rng = rng_for(spec.seed)

    if spec.strategy == FLIP:
        return _make_permutation(np.arange(n - 1, -1, -1), FLIP, seed=spec.seed)

    if spec.strategy == FIXED_SEGMENT:
        m = spec.segment_count
        if m > n:
            raise ValueError(f"segment_count {m} exceeds sequence length {n}")
        base = n // m
        starts = [i * base for i in range(m)]
        ends = starts[1:] + [n]  # remainder lands in the final block
        blocks = [np.arange(s, e) for s, e in zip(starts, ends)]
        order = rng.permutation(m)
        mapping = np.concatenate([blocks[i] for i in order])
        return _make_permutation(mapping, FIXED_SEGMENT,
                                 params={"segment_count": m}, seed=spec.seed)

    if spec.strategy in SHOT_STRATEGIES:
        if shot_ids is None:
            raise ValueError(f"{spec.strategy} requires shot_ids")
        runs = _shot_runs(shot_ids)
        if len(shot_ids) != n:
            raise ValueError("shot_ids length does not match n")
        if spec.strategy == INTRA_SHOT:
            mapping = np.concatenate([rng.permutation(run) for run in runs])
            return _make_permutation(mapping, INTRA_SHOT, seed=spec.seed)
        if spec.strategy == NEIGHBOUR_SHOT:
            w = spec.window
            pieces = []
            for start in range(0, len(runs), w):
                window = runs[start:start + w]
                for i in rng.permutation(len(window)):
                    pieces.append(window[i])
            mapping = np.concatenate(pieces)
            return _make_permutation(mapping, NEIGHBOUR_SHOT,
                                     params={"window": w}, seed=spec.seed)
        # any_shot
        order = rng.permutation(len(runs))
        mapping = np.concatenate([runs[i] for i in order])
        return _make_permutation(mapping, ANY_SHOT, seed=spec.seed)

    raise ValueError(f"unknown shuffle strategy {spec.strategy!r}")


def apply_permutation(record: VideoRecord, perm: Permutation) -> VideoRecord:
    """Reorder features, ground truth, annotator columns, and shot ids by one
    mapping. The input record is untouched; the result keeps the original
    boundary list (it describes the unshuffled video)."""
    if perm.n != record.n_frames:
        raise ValueError(f"permutation length {perm.n} != frame count {record.n_frames}")
    m = perm.mapping
    return VideoRecord(
        id=record.id,
        features=record.features[m],
        annotator_scores=record.annotator_scores[:, m],
        ground_truth=record.ground_truth[m],
        shot_boundaries_original=record.shot_boundaries_original,
        shot_ids=record.shot_ids[m],
        sample_rate=record.sample_rate,
    )


def levenshtein_distance(a, b) -> int:
    """Edit distance (insert/delete/substitute) between integer sequences."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.size == 0:
        return int(b.size)
    if b.size == 0:
        return int(a.size)
    # Row-vectorized DP; the insertion closure over a finished row is
    # min_k (row[k] + j - k), computed with a running minimum.
    prev = np.arange(b.size + 1, dtype=np.int64)
    offsets = np.arange(b.size + 1, dtype=np.int64)
    for i in range(1, a.size + 1):
        cur = np.empty_like(prev)
        cur[0] = i
        sub = prev[:-1] + (b != a[i - 1])
        cur[1:] = np.minimum(prev[1:] + 1, sub)
        cur = np.minimum.accumulate(cur - offsets) + offsets
        prev = cur
    return int(prev[-1])


def levenshtein_similarity(perm: Permutation, shot_ids: np.ndarray | None = None,
                           level: str = "shot") -> float:
    """Similarity between the original and permuted sequence, scaled so 100
    means unchanged: 100 * (1 - L/N) with L the edit distance over frame
    indices (level="frame") or over shot-id sequences (level="shot")."""
    n = perm.n
    if level == "frame":
        dist = levenshtein_distance(np.arange(n), perm.mapping)
    elif level == "shot":
        if shot_ids is None:
            raise ValueError("shot level requires shot_ids")
        shot_ids = np.asarray(shot_ids)
        dist = levenshtein_distance(shot_ids, shot_ids[perm.mapping])
    else:
        raise ValueError(f"unknown level {level!r}")
    return 100.0 * (1.0 - dist / n)


SIMILARITY_TABLE_ROWS = (
    (FLIP, "Flip"),
    (INTRA_SHOT, "Intra Shot Shuffle"),
    (FIXED_SEGMENT, "Fixed Segment Shuffle"),
    (NEIGHBOUR_SHOT, "Neighbouring Shot Shuffle"),
    (ANY_SHOT, "Whole Shot Shuffle"),
)


def similarity_table(dataset, iterations: int = 3, seed: int = 0, level: str = "shot",
                     segment_count: int = 4, window: int = 3):
    """Per strategy, the dataset-mean Levenshtein similarity between original
    and shuffled sequences: each video is shuffled ``iterations`` times with
    independent seeds (once for the deterministic flip) and the per-video
    means are averaged. Returns (label, iterations, similarity) rows."""
    rows = []
    for strategy, label in SIMILARITY_TABLE_ROWS:
        iters = 1 if strategy == FLIP else iterations
        per_video = []
        for vi, video in enumerate(dataset.videos):
            sims = []
            for it in range(iters):
                spec = ShuffleSpec(strategy=strategy, segment_count=segment_count,
                                   window=window,
                                   seed=int(rng_for(seed, vi, it).integers(1 << 62)))
                perm = generate_permutation(spec, video.n_frames, video.shot_ids)
                sims.append(levenshtein_similarity(perm, video.shot_ids, level=level))
            per_video.append(float(np.mean(sims)))
        rows.append((label, iters, float(np.mean(per_video))))
    return rows


def sample_augmentation(seed: int, p: float, n: int,
                        shot_ids: np.ndarray | None = None,
                        segment_count: int = 4,
                        strategies: tuple[str, ...] = (FLIP, FIXED_SEGMENT)) -> Permutation:
    """With probability p return a permutation drawn uniformly from the given
    strategies, otherwise the identity. Deterministic for a given seed."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    rng = rng_for(seed)
    if rng.random() >= p:
        return identity_permutation(n)
    strategy = strategies[int(rng.integers(len(strategies)))]
    sub_seed = int(rng.integers(1 << 62))
    spec = ShuffleSpec(strategy=strategy, segment_count=segment_count, seed=sub_seed)
    return generate_permutation(spec, n, shot_ids)
