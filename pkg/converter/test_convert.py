from __future__ import annotations

import hashlib
import json
import subprocess
import sys
import time
from pathlib import Path

import h5py
import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
from convert import ConversionError, convert, main  # noqa: E402


def make_archive(path, videos=3, n_frames=150, rate=15, dim=8,
                 annotators=3, style="tvsum", with_boundaries=True, seed=0):
    rng = np.random.default_rng(seed)
    picks = np.arange(0, n_frames, rate)
    with h5py.File(path, "w") as archive:
        for i in range(videos):
            group = archive.create_group(f"video_{i + 1}")
            group["features"] = rng.normal(size=(picks.size, dim)).astype(np.float32)
            if style == "tvsum":
                group["user_anno"] = rng.integers(1, 6, size=(annotators, n_frames)).astype(np.float64)
            else:
                group["user_summary"] = rng.integers(0, 2, size=(annotators, n_frames)).astype(np.float64)
            if with_boundaries:
                cuts = [0, n_frames // 3, 2 * n_frames // 3, n_frames]
                group["change_points"] = np.array(
                    [[cuts[k], cuts[k + 1] - 1] for k in range(3)], dtype=np.int64)
            group["n_frames"] = np.int64(n_frames)
            group["picks"] = picks
    return path


def primary_validate(dataset_dir) -> int:
    proc = subprocess.run([sys.executable, "-m", "temporal_probe", "validate",
                           str(dataset_dir)], capture_output=True, text=True)
    return proc.returncode


class TestConvert:
    def test_round_trip_and_byte_exact_features(self, tmp_path):
        start = time.perf_counter()
        src = make_archive(tmp_path / "arch.h5")
        out = tmp_path / "ds"
        summary = convert(src, out, "tvsum")
        assert summary.videos == 3
        assert summary.feature_dim == 8
        assert summary.sample_rate == 15
        assert not summary.warnings

        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["style"] == "tvsum_style"
        assert manifest["videos"] == ["video_1", "video_2", "video_3"]

        # feature payload must match the source bytes exactly (sum + hash)
        with h5py.File(src, "r") as archive:
            for vid in manifest["videos"]:
                source = np.ascontiguousarray(archive[vid]["features"], dtype="<f4")
                payload = (out / f"{vid}.feat").read_bytes()[16:]
                assert payload == source.tobytes()
                assert hashlib.sha256(payload).hexdigest() == \
                    hashlib.sha256(source.tobytes()).hexdigest()
                assert np.frombuffer(payload, dtype="<f4").sum() == source.ravel().sum()

        assert primary_validate(out) == 0
        assert time.perf_counter() - start < 60.0

    def test_idempotent(self, tmp_path):
        src = make_archive(tmp_path / "arch.h5")
        out = tmp_path / "ds"
        convert(src, out, "tvsum")
        first = {p.name: p.read_bytes() for p in out.iterdir()}
        convert(src, out, "tvsum")
        second = {p.name: p.read_bytes() for p in out.iterdir()}
        assert first == second

    def test_summe_style(self, tmp_path):
        src = make_archive(tmp_path / "arch.h5", style="summe")
        out = tmp_path / "ds"
        summary = convert(src, out, "summe")
        assert summary.videos == 3
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["style"] == "summe_style"
        assert primary_validate(out) == 0

    def test_missing_boundaries_warns_and_validates(self, tmp_path):
        src = make_archive(tmp_path / "arch.h5", with_boundaries=False)
        out = tmp_path / "ds"
        summary = convert(src, out, "tvsum")
        assert len(summary.warnings) == 3
        assert "single full-range shot" in summary.warnings[0]
        ann = json.loads((out / "video_1.ann.json").read_text())
        assert ann["shot_boundaries_original"] == [[0, 149]]
        assert primary_validate(out) == 0

    def test_annotations_already_subsampled(self, tmp_path):
        rng = np.random.default_rng(2)
        src = tmp_path / "arch.h5"
        with h5py.File(src, "w") as archive:
            group = archive.create_group("clip")
            group["features"] = rng.normal(size=(10, 6)).astype(np.float32)
            group["user_anno"] = rng.integers(1, 6, size=(2, 10)).astype(np.float64)
            group["change_points"] = np.array([[0, 149]], dtype=np.int64)
            group["picks"] = np.arange(0, 150, 15)
        out = tmp_path / "ds"
        convert(src, out, "tvsum")
        ann = json.loads((out / "clip.ann.json").read_text())
        assert len(ann["annotator_scores"][0]) == 10
        assert primary_validate(out) == 0

    def test_missing_features_key_named(self, tmp_path):
        src = tmp_path / "arch.h5"
        with h5py.File(src, "w") as archive:
            group = archive.create_group("clip")
            group["user_anno"] = np.ones((1, 10))
        with pytest.raises(ConversionError, match="features"):
            convert(src, tmp_path / "ds", "tvsum")

    def test_inconsistent_widths_rejected(self, tmp_path):
        rng = np.random.default_rng(3)
        src = tmp_path / "arch.h5"
        with h5py.File(src, "w") as archive:
            for i, dim in enumerate((6, 7)):
                group = archive.create_group(f"video_{i}")
                group["features"] = rng.normal(size=(4, dim)).astype(np.float32)
                group["user_anno"] = rng.integers(1, 6, size=(1, 4)).astype(np.float64)
                group["change_points"] = np.array([[0, 59]], dtype=np.int64)
                group["picks"] = np.arange(0, 60, 15)
        with pytest.raises(ConversionError, match="width"):
            convert(src, tmp_path / "ds", "tvsum")

    def test_cli_entry(self, tmp_path, capsys):
        src = make_archive(tmp_path / "arch.h5")
        out = tmp_path / "ds"
        assert main(["--src", str(src), "--style", "tvsum", "--out", str(out)]) == 0
        assert "converted 3 videos" in capsys.readouterr().out
        assert main(["--src", str(tmp_path / "nope.h5"), "--style", "tvsum",
                     "--out", str(out)]) == 1

    def test_sample_rate_override_and_inference(self, tmp_path):
        src = make_archive(tmp_path / "arch.h5", rate=10, n_frames=100)
        out = tmp_path / "ds"
        assert convert(src, out, "tvsum").sample_rate == 10
        out2 = tmp_path / "ds2"
        assert convert(src, out2, "tvsum", sample_rate=5).sample_rate == 5
