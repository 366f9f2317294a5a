from __future__ import annotations

import numpy as np
import pytest

from temporal_probe.analysis import (
    HeatmapPair,
    cosine_similarity_matrix,
    export_heatmap,
    gt_difference_matrix,
    make_heatmap_pair,
    similarity_alignment,
    zero_feature_rows,
)
from test_data import tiny_record


class TestCosine:
    def test_identical_rows_all_ones(self):
        f = np.tile([1.0, 2.0, 3.0], (4, 1))
        np.testing.assert_allclose(cosine_similarity_matrix(f), np.ones((4, 4)), atol=1e-12)

    def test_orthogonal_rows_identity(self):
        np.testing.assert_allclose(cosine_similarity_matrix(np.eye(3)), np.eye(3), atol=1e-12)

    def test_known_angle(self):
        m = cosine_similarity_matrix(np.array([[1.0, 0.0], [1.0, 1.0]]))
        assert m[0, 1] == pytest.approx(1 / np.sqrt(2))
        assert m[1, 0] == pytest.approx(1 / np.sqrt(2))

    def test_symmetric_and_clamped(self):
        rng = np.random.default_rng(40)
        f = rng.normal(size=(12, 6))
        m = cosine_similarity_matrix(f)
        np.testing.assert_allclose(m, m.T, atol=1e-6)
        assert m.min() >= -1.0 and m.max() <= 1.0
        np.testing.assert_allclose(np.diag(m), 1.0, atol=1e-12)

    def test_zero_rows_flagged(self):
        f = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 2.0]])
        m = cosine_similarity_matrix(f)
        assert zero_feature_rows(f) == (1,)
        np.testing.assert_array_equal(m[1], 0.0)
        np.testing.assert_array_equal(m[:, 1], 0.0)


class TestGtDiff:
    def test_constant_vector_zero_matrix(self):
        np.testing.assert_array_equal(gt_difference_matrix(np.full(5, 0.4)), np.zeros((5, 5)))

    def test_endpoints(self):
        np.testing.assert_array_equal(gt_difference_matrix(np.array([0.0, 1.0])),
                                      [[0.0, 1.0], [1.0, 0.0]])

    def test_three_values(self):
        m = gt_difference_matrix(np.array([0.2, 0.5, 0.9]))
        assert m[0, 2] == pytest.approx(0.7)
        assert m[2, 0] == pytest.approx(0.7)
        np.testing.assert_array_equal(np.diag(m), 0.0)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            gt_difference_matrix(np.array([0.5, 1.5]))


class TestAlignment:
    def test_aligned_structure_positive(self):
        # Two feature clusters: similar frames share importance -> alignment > 0.
        rng = np.random.default_rng(41)
        a = rng.normal(size=4) * 0.01 + np.array([5, 0, 0, 0])
        b = rng.normal(size=4) * 0.01 + np.array([0, 5, 0, 0])
        feats = np.stack([a, a, b, b]).astype(np.float32)
        gt = np.array([0.9, 0.9, 0.1, 0.1])
        pair = HeatmapPair("v", cosine_similarity_matrix(feats), gt_difference_matrix(gt))
        assert similarity_alignment(pair) > 0.9

    def test_constant_matrices_zero(self):
        pair = HeatmapPair("v", np.ones((3, 3)), np.zeros((3, 3)))
        assert similarity_alignment(pair) == 0.0


class TestExport:
    def test_files_written_and_round_trip(self, tmp_path):
        record = tiny_record(n=8, dim=5)
        pair = make_heatmap_pair(record)
        paths = export_heatmap(pair, tmp_path)
        names = sorted(p.name for p in paths)
        assert names == [f"{record.id}.cosine.csv", f"{record.id}.cosine.png",
                         f"{record.id}.gtdiff.csv", f"{record.id}.gtdiff.png"]
        reread = np.loadtxt(tmp_path / f"{record.id}.cosine.csv", delimiter=",")
        assert np.abs(reread - pair.cosine).max() < 1e-6

    def test_image_dimensions_track_n(self, tmp_path):
        from PIL import Image
        record = tiny_record(n=9, dim=5)
        export_heatmap(make_heatmap_pair(record), tmp_path)
        with Image.open(tmp_path / f"{record.id}.cosine.png") as img:
            assert img.size == (9, 9)
