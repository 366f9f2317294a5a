#!/usr/bin/env python3
"""One-shot converter: public preprocessed video-summarization archives
(HDF5, one group per video) into the toolkit dataset directory format.

    convert.py --src <archive.h5> --style tvsum|summe --out <dir>

Output format (kept in sync with the toolkit loader, which owns it):

    manifest.json   {"name", "style", "feature_dim", "sample_rate", "videos"}
    <id>.feat       header: magic b"TPFT" + version u32 + N u32 + D u32
                    (little-endian, 16 bytes), then N*D little-endian float32
    <id>.ann.json   {"annotator_scores": A x N, "shot_boundaries_original":
                     [[start, end], ...]} with boundaries in original-rate
                    inclusive frame indices

Feature bytes are copied verbatim (bit-exact); annotator scores are carried
at the subsampled rate (selected with the archive's "picks" indices when the
stored annotations are at the original frame rate). Ground truth is never
computed here; the toolkit derives it at load time.
"""

from __future__ import annotations

import argparse
import json
import struct
import sys
from dataclasses import dataclass, field
from pathlib import Path

import h5py
import numpy as np

FEAT_MAGIC = b"TPFT"
FEAT_VERSION = 1
_FEAT_HEADER = struct.Struct("<4sIII")

STYLE_NAMES = {"tvsum": "tvsum_style", "summe": "summe_style"}

FEATURE_KEYS = ("features", "feature")
ANNOTATION_KEYS = ("user_anno", "user_scores", "user_summary")
BOUNDARY_KEYS = ("change_points",)
PICK_KEYS = ("picks",)


class ConversionError(RuntimeError):
    pass


@dataclass
class ConversionSummary:
    videos: int = 0
    feature_dim: int = 0
    sample_rate: int = 0
    warnings: list = field(default_factory=list)


def _first_key(group, candidates):
    for key in candidates:
        if key in group:
            return key
    return None


def _require(group, video_id, candidates):
    key = _first_key(group, candidates)
    if key is None:
        raise ConversionError(
            f"{video_id}: none of the expected keys {list(candidates)} present")
    return key


def _infer_sample_rate(picks: np.ndarray | None, fallback: int) -> int:
    if picks is None or picks.size < 2:
        return fallback
    diffs = np.diff(np.sort(picks))
    diffs = diffs[diffs > 0]
    if diffs.size == 0:
        return fallback
    values, counts = np.unique(diffs, return_counts=True)
    return int(values[np.argmax(counts)])


def _subsample_annotations(raw: np.ndarray, n_steps: int, picks: np.ndarray | None,
                           video_id: str) -> np.ndarray:
    if raw.ndim != 2:
        raise ConversionError(f"{video_id}: annotations must be 2-D, got {raw.shape}")
    if raw.shape[1] == n_steps:
        return raw
    if picks is None:
        raise ConversionError(
            f"{video_id}: annotations have {raw.shape[1]} columns for {n_steps} "
            f"subsampled frames and no picks are available")
    if picks.max() >= raw.shape[1]:
        raise ConversionError(
            f"{video_id}: picks reach index {int(picks.max())} beyond "
            f"annotation length {raw.shape[1]}")
    return raw[:, picks]


def write_feat(path: Path, features: np.ndarray) -> bytes:
    payload = np.ascontiguousarray(features, dtype="<f4").tobytes()
    n, d = features.shape
    path.write_bytes(_FEAT_HEADER.pack(FEAT_MAGIC, FEAT_VERSION, n, d) + payload)
    return payload


def convert(src: Path, out_dir: Path, style: str, name: str | None = None,
            sample_rate: int | None = None) -> ConversionSummary:
    if style not in STYLE_NAMES:
        raise ConversionError(f"unknown style {style!r}; choose tvsum or summe")
    src = Path(src)
    if not src.is_file():
        raise ConversionError(f"archive not found: {src}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    summary = ConversionSummary()
    manifest_videos = []
    inferred_rate = None

    with h5py.File(src, "r") as archive:
        for video_id in sorted(archive.keys()):
            group = archive[video_id]
            feat_key = _require(group, video_id, FEATURE_KEYS)
            ann_key = _require(group, video_id, ANNOTATION_KEYS)

            features = np.asarray(group[feat_key], dtype="<f4")
            if features.ndim != 2:
                raise ConversionError(
                    f"{video_id}: features must be N x D, got {features.shape}")
            if summary.feature_dim == 0:
                summary.feature_dim = features.shape[1]
            elif features.shape[1] != summary.feature_dim:
                raise ConversionError(
                    f"{video_id}: feature width {features.shape[1]} differs from "
                    f"{summary.feature_dim} seen earlier")
            n_steps = features.shape[0]

            picks_key = _first_key(group, PICK_KEYS)
            picks = (np.asarray(group[picks_key]).astype(np.int64)
                     if picks_key else None)
            if inferred_rate is None:
                inferred_rate = sample_rate or _infer_sample_rate(picks, 15)

            annotations = _subsample_annotations(
                np.asarray(group[ann_key], dtype=np.float64), n_steps, picks, video_id)

            boundary_key = _first_key(group, BOUNDARY_KEYS)
            if boundary_key is not None:
                bounds = np.asarray(group[boundary_key]).astype(np.int64)
                boundaries = [[int(s), int(e)] for s, e in bounds]
            else:
                if "n_frames" in group:
                    last = int(np.asarray(group["n_frames"])) - 1
                elif picks is not None:
                    last = int(picks.max())
                else:
                    last = n_steps * inferred_rate - 1
                boundaries = [[0, last]]
                summary.warnings.append(
                    f"{video_id}: no shot boundaries in archive; "
                    f"emitted a single full-range shot (0, {last})")

            write_feat(out_dir / f"{video_id}.feat", features)
            ann = {
                "annotator_scores": annotations.tolist(),
                "shot_boundaries_original": boundaries,
            }
            (out_dir / f"{video_id}.ann.json").write_text(json.dumps(ann) + "\n")
            manifest_videos.append(video_id)
            summary.videos += 1

    if summary.videos == 0:
        raise ConversionError(f"{src}: archive holds no video groups")
    summary.sample_rate = inferred_rate or 15
    manifest = {
        "name": name or src.stem,
        "style": STYLE_NAMES[style],
        "feature_dim": summary.feature_dim,
        "sample_rate": summary.sample_rate,
        "videos": manifest_videos,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return summary


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Convert an HDF5 benchmark archive into the toolkit dataset format.")
    parser.add_argument("--src", required=True, help="HDF5 archive path")
    parser.add_argument("--style", required=True, choices=sorted(STYLE_NAMES),
                        help="annotation scale of the source dataset")
    parser.add_argument("--out", required=True, help="output dataset directory")
    parser.add_argument("--name", help="dataset name (default: archive stem)")
    parser.add_argument("--sample-rate", type=int,
                        help="override the subsampling rate instead of inferring it")
    args = parser.parse_args(argv)
    try:
        summary = convert(Path(args.src), Path(args.out), args.style,
                          name=args.name, sample_rate=args.sample_rate)
    except ConversionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for warning in summary.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(f"converted {summary.videos} videos, D={summary.feature_dim}, "
          f"sample_rate={summary.sample_rate} -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
