import numpy as np
import pytest

from gadaboost.haar import (
    HaarFeature,
    HaarType,
    canonical_id,
    compute_integral,
    corner_table,
    enumerate_features,
    eval_feature,
    feature_space_size,
    feature_values,
)


class TestIntegralImage:
    def test_unit_image_full_sum_is_area(self):
        ii = compute_integral(np.ones((2, 2), dtype=np.int64))
        assert ii.rect_sum(0, 0, 2, 2) == 4

    def test_empty_rectangle_is_zero(self, rng):
        ii = compute_integral(rng.integers(0, 256, size=(7, 5)))
        assert ii.rect_sum(3, 2, 3, 4) == 0
        assert ii.rect_sum(1, 4, 3, 4) == 0

    def test_padding_row_and_column_are_zero(self, rng):
        ii = compute_integral(rng.integers(0, 256, size=(4, 6)))
        assert not ii.sums[0, :].any()
        assert not ii.sums[:, 0].any()

    def test_monotone_along_rows_and_columns(self, rng):
        ii = compute_integral(rng.integers(0, 256, size=(9, 9)))
        assert (np.diff(ii.sums, axis=0) >= 0).all()
        assert (np.diff(ii.sums, axis=1) >= 0).all()

    def test_random_rectangles_match_naive_sums_exactly(self, rng):
        """rect_sum against the direct double-loop pixel sum, 0 tolerance."""
        img = rng.integers(0, 256, size=(19, 19))
        ii = compute_integral(img)
        for _ in range(1000):
            x, y = rng.integers(0, 19, size=2)
            x1 = rng.integers(x + 1, 20)
            y1 = rng.integers(y + 1, 20)
            naive = sum(int(img[r, c]) for r in range(y, y1) for c in range(x, x1))
            assert ii.rect_sum(x, y, x1, y1) == naive
            naive_sq = sum(int(img[r, c]) ** 2 for r in range(y, y1) for c in range(x, x1))
            assert ii.rect_sum_sq(x, y, x1, y1) == naive_sq

    def test_rejects_empty_or_non_2d(self):
        with pytest.raises(ValueError):
            compute_integral(np.zeros((0, 4)))
        with pytest.raises(ValueError):
            compute_integral(np.zeros(12))


class TestEvalFeature:
    def test_constant_image_scores_zero_for_every_type(self, rng):
        ii = compute_integral(np.full((12, 12), 77, dtype=np.int64))
        for f in enumerate_features(12, 12)[:: 197]:
            assert eval_feature(ii, f) == 0

    def test_half_contrast_x2_example(self):
        img = np.zeros((4, 4), dtype=np.int64)
        img[:, :2] = 255
        ii = compute_integral(img)
        f = HaarFeature(0, 0, 4, 4, HaarType.HAAR_X2)
        assert eval_feature(ii, f) == 255 * 8

    def test_negated_image_flips_sign(self):
        img = np.zeros((4, 4), dtype=np.int64)
        img[:, :2] = 255
        f = HaarFeature(0, 0, 4, 4, HaarType.HAAR_X2)
        assert eval_feature(compute_integral(-img), f) == -255 * 8

    def test_linear_in_intensities(self, rng):
        img = rng.uniform(0, 255, size=(10, 10))
        f = HaarFeature(1, 2, 7, 8, HaarType.HAAR_X3)
        v1 = eval_feature(compute_integral(img), f)
        v3 = eval_feature(compute_integral(3.0 * img), f)
        assert v3 == pytest.approx(3.0 * v1, rel=1e-12)

    def test_offset_placement_matches_cropped_window(self, rng):
        img = rng.integers(0, 256, size=(15, 15))
        f = HaarFeature(0, 0, 6, 4, HaarType.HAAR_X2Y2)
        whole = compute_integral(img)
        crop = compute_integral(img[3:7, 5:11])
        assert eval_feature(whole, f, ox=5, oy=3) == eval_feature(crop, f)

    def test_out_of_bounds_placement_raises(self, rng):
        ii = compute_integral(rng.integers(0, 256, size=(8, 8)))
        f = HaarFeature(0, 0, 6, 6, HaarType.HAAR_X2)
        with pytest.raises(ValueError):
            eval_feature(ii, f, ox=3, oy=0)

    def test_batched_values_match_scalar_eval(self, rng):
        imgs = [rng.uniform(0, 255, size=(9, 9)) for _ in range(8)]
        iis = [compute_integral(im) for im in imgs]
        flat = np.stack([ii.sums.reshape(-1) for ii in iis])
        feats = enumerate_features(9, 9)[:: 37]
        idx, wgt = corner_table(feats, 10)
        values = feature_values(flat, idx, wgt)
        for i, ii in enumerate(iis):
            for j, f in enumerate(feats):
                assert values[i, j] == pytest.approx(eval_feature(ii, f), abs=1e-9)


def count_features_nested_loops(w: int, h: int) -> int:
    """Independent quintuple-loop counting oracle."""
    divisors = {0: (2, 1), 1: (1, 2), 2: (3, 1), 3: (1, 3), 4: (2, 2)}
    count = 0
    for t in range(5):
        kx, ky = divisors[t]
        for y in range(h):
            for x in range(w):
                for y1 in range(y + 1, h + 1):
                    if (y1 - y) % ky:
                        continue
                    for x1 in range(x + 1, w + 1):
                        if (x1 - x) % kx == 0:
                            count += 1
    return count


class TestEnumerateFeatures:
    def test_degenerate_1x1_window_is_empty(self):
        assert enumerate_features(1, 1) == []

    def test_2x1_window_forces_single_x2(self):
        feats = enumerate_features(2, 1)
        assert feats == [HaarFeature(0, 0, 2, 1, HaarType.HAAR_X2)]

    def test_all_enumerated_features_are_valid_and_unique(self):
        feats = enumerate_features(10, 8)
        assert all(f.is_valid(10, 8) for f in feats)
        assert len({(f.x, f.y, f.x1, f.y1, f.htype) for f in feats}) == len(feats)

    @pytest.mark.parametrize("w,h", [(1, 1), (2, 1), (4, 3), (6, 6), (10, 8)])
    def test_count_matches_nested_loop_oracle(self, w, h):
        assert len(enumerate_features(w, h)) == count_features_nested_loops(w, h)

    def test_count_matches_closed_form(self):
        for w, h in [(5, 7), (12, 12), (19, 19)]:
            assert len(enumerate_features(w, h)) == feature_space_size(w, h)

    def test_deterministic_type_major_order(self):
        feats = enumerate_features(5, 4)
        keys = [(int(f.htype), f.y, f.x, f.y1, f.x1) for f in feats]
        assert keys == sorted(keys)


class TestCanonicalId:
    def test_equal_features_share_an_id(self):
        a = HaarFeature(1, 0, 3, 2, HaarType.HAAR_X2)
        b = HaarFeature(1, 0, 3, 2, HaarType.HAAR_X2)
        assert canonical_id(a, 6, 6) == canonical_id(b, 6, 6)

    def test_type_alone_distinguishes(self):
        a = HaarFeature(0, 0, 2, 2, HaarType.HAAR_X2)
        b = HaarFeature(0, 0, 2, 2, HaarType.HAAR_Y2)
        assert canonical_id(a, 6, 6) != canonical_id(b, 6, 6)

    def test_invalid_feature_rejected(self):
        with pytest.raises(ValueError):
            canonical_id(HaarFeature(0, 0, 3, 1, HaarType.HAAR_X2), 6, 6)
        with pytest.raises(ValueError):
            canonical_id(HaarFeature(0, 0, 2, 1, HaarType.HAAR_X2), 1, 1)

    def test_bijective_over_full_19x19_enumeration(self):
        feats = enumerate_features(19, 19)
        ids = {canonical_id(f, 19, 19) for f in feats}
        assert len(ids) == len(feats)

    def test_enumeration_order_is_ascending_id(self):
        feats = enumerate_features(7, 5)
        ids = [canonical_id(f, 7, 5) for f in feats]
        assert ids == sorted(ids)
