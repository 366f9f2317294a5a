"""Tie-corrected rank correlations and the two per-video evaluation
protocols. Degenerate inputs (a constant vector makes the denominator zero)
yield 0.0 with an explicit flag instead of NaN so aggregates stay defined."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import SUMME_STYLE, TVSUM_STYLE, VideoRecord


@dataclass(frozen=True)
class VideoEvalResult:
    video_id: str
    kendall: float
    spearman: float
    degenerate: bool = False


def _pair_counts(x: np.ndarray, y: np.ndarray) -> tuple[int, int, int, int]:
    """Exact pair counts over all i<j: concordant, discordant, tied only in
    x, tied only in y. Pairs tied in both drop out of every term."""
    dx = np.sign(x[:, None] - x[None, :])
    dy = np.sign(y[:, None] - y[None, :])
    iu = np.triu_indices(x.shape[0], k=1)
    dx, dy = dx[iu], dy[iu]
    prod = dx * dy
    concordant = int((prod > 0).sum())
    discordant = int((prod < 0).sum())
    ties_x = int(((dx == 0) & (dy != 0)).sum())
    ties_y = int(((dy == 0) & (dx != 0)).sum())
    return concordant, discordant, ties_x, ties_y


def _kendall(x: np.ndarray, y: np.ndarray) -> tuple[float, bool]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be equal-length vectors")
    if x.shape[0] < 2:
        raise ValueError("need at least two observations")
    c, d, tx, ty = _pair_counts(x, y)
    denom = (c + d + tx) * (c + d + ty)
    if denom == 0:
        return 0.0, True
    return (c - d) / math.sqrt(denom), False


def midranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.shape[0], dtype=np.float64)
    i = 0
    while i < x.shape[0]:
        j = i
        while j + 1 < x.shape[0] and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _spearman(x: np.ndarray, y: np.ndarray) -> tuple[float, bool]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be equal-length vectors")
    if x.shape[0] < 2:
        raise ValueError("need at least two observations")
    rx = midranks(x)
    ry = midranks(y)
    ax = rx - np.mean(rx)
    ay = ry - np.mean(ry)
    denom = math.sqrt(float(np.dot(ax, ax)) * float(np.dot(ay, ay)))
    if denom == 0.0:
        return 0.0, True
    return float(np.dot(ax, ay)) / denom, False


def kendall_tau(x, y) -> float:
    """Tau-b: (C - D) / sqrt((C + D + Tx)(C + D + Ty)); constant input -> 0."""
    return _kendall(x, y)[0]


def spearman_rho(x, y) -> float:
    """Pearson correlation of midranks; constant input -> 0."""
    return _spearman(x, y)[0]


def evaluate_video(pred: np.ndarray, record: VideoRecord, style: str) -> VideoEvalResult:
    """Correlation between predictions and human annotations.

    tvsum_style averages the correlation against each annotator's scores;
    summe_style correlates against the annotator mean.
    """
    pred = np.asarray(pred, dtype=np.float64)
    if pred.shape[0] != record.n_frames:
        raise ValueError(f"prediction length {pred.shape[0]} != {record.n_frames} frames")
    scores = record.annotator_scores
    if scores.shape[0] == 0:
        raise ValueError("record has no annotators")
    degenerate = False
    if style == TVSUM_STYLE:
        taus, rhos = [], []
        for a in range(scores.shape[0]):
            tau, d1 = _kendall(pred, scores[a])
            rho, d2 = _spearman(pred, scores[a])
            taus.append(tau)
            rhos.append(rho)
            degenerate = degenerate or d1 or d2
        kendall = float(np.mean(taus))
        spearman = float(np.mean(rhos))
    elif style == SUMME_STYLE:
        target = scores.mean(axis=0)
        kendall, d1 = _kendall(pred, target)
        spearman, d2 = _spearman(pred, target)
        degenerate = d1 or d2
    else:
        raise ValueError(f"unknown style {style!r}")
    return VideoEvalResult(video_id=record.id, kendall=kendall,
                           spearman=spearman, degenerate=degenerate)


def threshold_fraction(results, threshold: float) -> float:
    """Fraction of videos whose kendall correlation reaches the threshold."""
    results = list(results)
    if not results:
        raise ValueError("no results to threshold")
    hits = sum(1 for r in results if r.kendall >= threshold)
    return hits / len(results)


def results_to_csv(results, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["video_id", "kendall", "spearman", "degenerate_flag"])
        for r in results:
            writer.writerow([r.video_id, f"{r.kendall:.10g}", f"{r.spearman:.10g}",
                             int(r.degenerate)])
    return path
