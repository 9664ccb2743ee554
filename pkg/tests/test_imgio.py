import numpy as np
import pytest

from gadaboost.imgio import (
    AnnotationRecord,
    ImageFormatError,
    eyes_to_box,
    load_annotations,
    normalize_window,
    read_detections_csv,
    read_gray,
    read_pgm,
    resample_window,
    save_annotations,
    write_detections_csv,
    write_pgm,
)


class TestPgm:
    def test_round_trip(self, tmp_path, rng):
        img = rng.integers(0, 256, size=(13, 17)).astype(np.uint8)
        path = tmp_path / "img.pgm"
        write_pgm(path, img)
        np.testing.assert_array_equal(read_pgm(path), img)

    def test_header_comments_are_skipped(self, tmp_path):
        raster = bytes(range(6))
        path = tmp_path / "c.pgm"
        path.write_bytes(b"P5\n# a comment\n3 2\n# more\n255\n" + raster)
        img = read_pgm(path)
        assert img.shape == (2, 3)
        assert img[1, 2] == 5

    def test_rejects_non_p5(self, tmp_path):
        path = tmp_path / "x.pgm"
        path.write_bytes(b"P2\n2 2\n255\n0 0 0 0")
        with pytest.raises(ImageFormatError):
            read_pgm(path)

    def test_rejects_truncated_raster(self, tmp_path):
        path = tmp_path / "t.pgm"
        path.write_bytes(b"P5\n4 4\n255\nabc")
        with pytest.raises(ImageFormatError, match="truncated"):
            read_pgm(path)

    def test_read_gray_uses_pgm_reader(self, tmp_path, rng):
        img = rng.integers(0, 256, size=(5, 5)).astype(np.uint8)
        path = tmp_path / "g.pgm"
        write_pgm(path, img)
        np.testing.assert_array_equal(read_gray(path), img)

    def test_read_gray_png_via_pillow(self, tmp_path, rng):
        PIL = pytest.importorskip("PIL.Image")
        img = rng.integers(0, 256, size=(8, 6)).astype(np.uint8)
        path = tmp_path / "g.png"
        PIL.fromarray(img, mode="L").save(path)
        np.testing.assert_array_equal(read_gray(path), img)


class TestNormalization:
    def test_zero_mean_unit_variance(self, rng):
        win = rng.uniform(0, 255, size=(9, 9))
        out = normalize_window(win)
        assert out.mean() == pytest.approx(0.0, abs=1e-12)
        assert out.std() == pytest.approx(1.0, abs=1e-9)

    def test_flat_window_stays_flat(self):
        out = normalize_window(np.full((5, 5), 77.0))
        np.testing.assert_array_equal(out, np.zeros((5, 5)))

    def test_matches_integral_table_deviation(self, rng):
        """The ingest-time deviation and the detector's squared-sum
        deviation are the same statistic."""
        from gadaboost.haar import compute_integral

        win = rng.uniform(0, 255, size=(7, 7))
        ii = compute_integral(win)
        sd_detector = ii.window_stddev(0, 0, 7, 7)
        mean = win.mean()
        sd_ingest = np.sqrt((win * win).mean() - mean * mean)
        assert sd_detector == pytest.approx(sd_ingest, rel=1e-12)


class TestResample:
    def test_identity_when_same_size(self, rng):
        win = rng.uniform(0, 255, size=(6, 8))
        np.testing.assert_array_equal(resample_window(win, 6, 8), win)

    def test_exact_block_mean_on_integer_factor(self):
        src = np.arange(16, dtype=float).reshape(4, 4)
        out = resample_window(src, 2, 2)
        expected = np.array([[src[:2, :2].mean(), src[:2, 2:].mean()],
                             [src[2:, :2].mean(), src[2:, 2:].mean()]])
        np.testing.assert_allclose(out, expected)

    def test_preserves_overall_mean_approximately(self, rng):
        src = rng.uniform(0, 255, size=(37, 29))
        out = resample_window(src, 10, 10)
        assert out.mean() == pytest.approx(src.mean(), rel=0.05)

    def test_upsampling_rejected(self):
        with pytest.raises(ValueError):
            resample_window(np.zeros((4, 4)), 8, 8)


class TestAnnotations:
    def test_round_trip(self, tmp_path):
        (tmp_path / "a.pgm").write_bytes(b"P5\n1 1\n255\n\x00")
        (tmp_path / "b.pgm").write_bytes(b"P5\n1 1\n255\n\x00")
        records = [
            AnnotationRecord("a.pgm", ((0, 0, 4, 4), (5, 6, 7, 8))),
            AnnotationRecord("b.pgm", ()),
        ]
        path = tmp_path / "ann.txt"
        save_annotations(path, records)
        assert load_annotations(path) == records

    def test_missing_image_rejected_unless_disabled(self, tmp_path):
        path = tmp_path / "ann.txt"
        path.write_text("ghost.pgm 1 0 0 4 4\n")
        with pytest.raises(FileNotFoundError):
            load_annotations(path)
        assert load_annotations(path, check_files=False)[0].image == "ghost.pgm"

    def test_malformed_counts_rejected(self, tmp_path):
        path = tmp_path / "ann.txt"
        path.write_text("a.pgm 2 0 0 4 4\n")
        with pytest.raises(ValueError, match="box numbers"):
            load_annotations(path, check_files=False)

    def test_non_positive_boxes_rejected(self, tmp_path):
        path = tmp_path / "ann.txt"
        path.write_text("a.pgm 1 0 0 0 4\n")
        with pytest.raises(ValueError, match="non-positive"):
            load_annotations(path, check_files=False)


class TestEyesToBox:
    def test_horizontal_eyes_make_centered_square(self):
        # eye distance 10 -> side 20, centered on the midpoint (15, 10)
        assert eyes_to_box(10, 10, 20, 10) == (5, 0, 20, 20)

    def test_side_is_twice_the_eye_distance(self):
        x, y, w, h = eyes_to_box(0, 0, 3, 4)  # distance 5
        assert (w, h) == (10, 10)


class TestDetectionsCsv:
    def test_round_trip(self, tmp_path):
        rows = [("a.pgm", 1, 2, 10, 10, 0.123456789012345),
                ("b.pgm", 0, 0, 5, 5, -1.5)]
        path = tmp_path / "dets.csv"
        write_detections_csv(path, rows)
        assert read_detections_csv(path) == rows

    def test_header_enforced(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("imagen,x,y,w,h,score\n")
        with pytest.raises(ValueError, match="header"):
            read_detections_csv(path)
