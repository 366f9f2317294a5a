"""Planted synthetic datasets with analytically defined ground truth.

Two kinds: ``content`` ties each frame's importance to its feature vector
alone (any frame-wise model can learn it); ``position`` ties importance to
the frame index alone, so only order-aware models can do better than chance.
"""

from __future__ import annotations

import numpy as np

from .data import SUMME_STYLE, Dataset, make_video_record
from .seeding import SYNTH, rng_for

CONTENT = "content"
POSITION = "position"
KINDS = (CONTENT, POSITION)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


def _shot_boundaries(n_frames: int, sample_rate: int, rng: np.random.Generator):
    """Random shots of 6..14 subsampled frames, expressed in original-rate
    inclusive indices."""
    bounds = []
    start = 0
    while start < n_frames:
        length = min(int(rng.integers(6, 15)), n_frames - start)
        end_sub = start + length - 1
        bounds.append((start * sample_rate, (end_sub + 1) * sample_rate - 1))
        start = end_sub + 1
    return bounds


def make_content_dataset(videos: int = 20, frames: int = 60, dim: int = 16,
                         seed: int = 7, name: str = "synth-content") -> Dataset:
    """Importance is a fixed monotone function of a linear feature readout;
    frame order carries no information."""
    master = rng_for(seed, SYNTH, 0)
    w = master.normal(size=dim) / np.sqrt(dim)
    records = []
    sample_rate = 15
    for i in range(videos):
        rng = rng_for(seed, SYNTH, 1, i)
        n = frames + int(rng.integers(-frames // 10, frames // 10 + 1))
        feats = rng.normal(size=(n, dim)).astype(np.float32)
        gt = _sigmoid(2.0 * (feats.astype(np.float64) @ w))
        records.append(make_video_record(
            f"content{i:03d}", feats, gt[None, :],
            _shot_boundaries(n, sample_rate, rng), sample_rate, SUMME_STYLE))
    return Dataset(name=name, style=SUMME_STYLE, videos=tuple(records),
                   sample_rate=sample_rate)


def make_position_dataset(videos: int = 20, frames: int = 48, dim: int = 16,
                          noise: float = 0.25, seed: int = 11,
                          name: str = "synth-position") -> Dataset:
    """Importance ramps with the frame index; features are pure noise, so
    only positional information can predict the target."""
    records = []
    sample_rate = 15
    gt = np.linspace(0.05, 0.95, frames)
    for i in range(videos):
        rng = rng_for(seed, SYNTH, 2, i)
        feats = (noise * rng.normal(size=(frames, dim))).astype(np.float32)
        records.append(make_video_record(
            f"position{i:03d}", feats, gt[None, :],
            _shot_boundaries(frames, sample_rate, rng), sample_rate, SUMME_STYLE))
    return Dataset(name=name, style=SUMME_STYLE, videos=tuple(records),
                   sample_rate=sample_rate)


def make_dataset(kind: str, **kwargs) -> Dataset:
    if kind == CONTENT:
        return make_content_dataset(**kwargs)
    if kind == POSITION:
        return make_position_dataset(**kwargs)
    raise ValueError(f"unknown synthetic kind {kind!r}; choose from {KINDS}")
