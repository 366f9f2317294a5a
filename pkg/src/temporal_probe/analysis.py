"""Dataset introspection: frame-similarity vs. importance-difference
heatmaps, and a scalar alignment proxy between the two."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np

from .data import VideoRecord


@dataclass(frozen=True)
class HeatmapPair:
    video_id: str
    cosine: np.ndarray    # (N, N) in [-1, 1]
    gt_diff: np.ndarray   # (N, N) in [0, 1]
    zero_rows: tuple[int, ...] = ()


def cosine_similarity_matrix(features: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarity between feature rows, clamped to [-1, 1].
    Zero rows get 0 everywhere (including the diagonal); see
    ``zero_feature_rows`` for the flag."""
    f = np.asarray(features, dtype=np.float64)
    norms = np.linalg.norm(f, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    unit = f / safe[:, None]
    m = np.clip(unit @ unit.T, -1.0, 1.0)
    zero = norms == 0.0
    m[zero, :] = 0.0
    m[:, zero] = 0.0
    return m


def zero_feature_rows(features: np.ndarray) -> tuple[int, ...]:
    norms = np.linalg.norm(np.asarray(features, dtype=np.float64), axis=1)
    return tuple(int(i) for i in np.flatnonzero(norms == 0.0))


def gt_difference_matrix(ground_truth: np.ndarray) -> np.ndarray:
    """Absolute pairwise differences of per-frame importance scores."""
    y = np.asarray(ground_truth, dtype=np.float64)
    if y.size and (y.min() < 0.0 or y.max() > 1.0):
        raise ValueError("ground truth must lie in [0, 1]")
    return np.abs(y[:, None] - y[None, :])


def make_heatmap_pair(record: VideoRecord) -> HeatmapPair:
    return HeatmapPair(
        video_id=record.id,
        cosine=cosine_similarity_matrix(record.features),
        gt_diff=gt_difference_matrix(record.ground_truth),
        zero_rows=zero_feature_rows(record.features),
    )


def similarity_alignment(pair: HeatmapPair) -> float:
    """Pearson correlation between the upper triangles of the cosine matrix
    and the negated difference matrix. Positive values mean visually similar
    frames also carry similar importance. Constant triangles give 0."""
    n = pair.cosine.shape[0]
    if n < 2:
        return 0.0
    iu = np.triu_indices(n, k=1)
    a = pair.cosine[iu]
    b = -pair.gt_diff[iu]
    a = a - a.mean()
    b = b - b.mean()
    denom = np.sqrt(float(np.dot(a, a)) * float(np.dot(b, b)))
    if denom == 0.0:
        return 0.0
    return float(np.dot(a, b)) / denom


def export_heatmap(pair: HeatmapPair, out_dir) -> list[Path]:
    """Write both matrices as CSV plus rendered PNGs (one pixel per cell).
    The difference map uses the inverse color ramp so regions of similar
    importance match the look of high-similarity regions."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for stem, matrix, cmap, lo, hi in (
        ("cosine", pair.cosine, "viridis", -1.0, 1.0),
        ("gtdiff", pair.gt_diff, "viridis_r", 0.0, 1.0),
    ):
        csv_path = out / f"{pair.video_id}.{stem}.csv"
        np.savetxt(csv_path, matrix, delimiter=",", fmt="%.8e")
        png_path = out / f"{pair.video_id}.{stem}.png"
        plt.imsave(png_path, matrix, cmap=cmap, vmin=lo, vmax=hi)
        paths.extend([csv_path, png_path])
    return paths
