"""Preprocessing operators against independent nested-loop oracles."""

import math

import numpy as np
import numpy.testing as npt
import pytest

from cxrnet.preproc import (
    NEIGHBOR_OFFSETS,
    adaptive_threshold_gaussian,
    adjust_brightness_contrast,
    apply_operator,
    gaussian_kernel_1d,
    histogram_equalize,
    hybrid_preprocess,
    local_ternary_pattern,
    rgb_to_gray,
)

from helpers import ramp_image, random_image


# --- oracles: direct per-pixel counting/comparison, no vectorization -----


def histeq_oracle(img):
    h, w = img.shape
    n = h * w
    hist = [0] * 256
    for y in range(h):
        for x in range(w):
            hist[int(img[y, x])] += 1
    cdf = []
    run = 0
    for count in hist:
        run += count
        cdf.append(run)
    cdf_min = next(c for c in cdf if c > 0)
    if cdf_min == n:
        return img.copy()
    out = np.zeros_like(img)
    for y in range(h):
        for x in range(w):
            v = int(img[y, x])
            out[y, x] = math.floor((cdf[v] - cdf_min) * 255.0 / (n - cdf_min) + 0.5)
    return out


def ltp_oracle(img, t):
    h, w = img.shape
    upper = np.zeros((h, w), dtype=np.uint8)
    lower = np.zeros((h, w), dtype=np.uint8)

    def at(y, x):  # replicated edges
        return int(img[min(max(y, 0), h - 1), min(max(x, 0), w - 1)])

    for y in range(h):
        for x in range(w):
            center = int(img[y, x])
            up = lo = 0
            for k, (dy, dx) in enumerate(NEIGHBOR_OFFSETS):
                v = at(y + dy, x + dx)
                if v > center + t:
                    up |= 1 << (7 - k)
                elif v < center - t:
                    lo |= 1 << (7 - k)
            upper[y, x] = up
            lower[y, x] = lo
    return upper, lower


def gaussian_threshold_oracle(img, block, c):
    h, w = img.shape
    pad = (block - 1) // 2
    sigma = 0.3 * ((block - 1) * 0.5 - 1.0) + 0.8
    k1 = [math.exp(-((i - (block - 1) / 2.0) ** 2) / (2 * sigma * sigma)) for i in range(block)]
    total = sum(k1)
    k1 = [v / total for v in k1]

    def mirror(i, n):  # reflect without repeating the edge sample
        if i < 0:
            return -i
        if i >= n:
            return 2 * n - 2 - i
        return i

    out = np.zeros((h, w), dtype=np.uint8)
    for y in range(h):
        for x in range(w):
            mean = 0.0
            for dy in range(-pad, pad + 1):
                for dx in range(-pad, pad + 1):
                    weight = k1[dy + pad] * k1[dx + pad]
                    mean += weight * img[mirror(y + dy, h), mirror(x + dx, w)]
            out[y, x] = 255 if img[y, x] > mean - c else 0
    return out


# --- brightness/contrast --------------------------------------------------


class TestBrightnessContrast:
    def test_identity(self):
        img = random_image(np.random.default_rng(0))
        npt.assert_array_equal(adjust_brightness_contrast(img, 1.0, 0.0), img)

    def test_pixel_arithmetic(self):
        img = np.array([[120, 200]], dtype=np.uint8)
        out = adjust_brightness_contrast(img, 2.0, 10.0)
        assert out[0, 0] == 250  # 2 * 120 + 10
        assert out[0, 1] == 255  # 410 clamped

    def test_negative_clamp(self):
        img = np.array([[5]], dtype=np.uint8)
        assert adjust_brightness_contrast(img, 1.0, -50.0)[0, 0] == 0

    @pytest.mark.parametrize("alpha", [0.0, -1.0])
    def test_rejects_non_positive_alpha(self, alpha):
        with pytest.raises(ValueError, match="alpha"):
            adjust_brightness_contrast(random_image(np.random.default_rng(1)), alpha, 0.0)

    def test_preserves_shape_and_dtype(self):
        img = random_image(np.random.default_rng(2), 9, 13)
        out = adjust_brightness_contrast(img, 1.2, 10.0)
        assert out.shape == img.shape and out.dtype == np.uint8


# --- histogram equalization ----------------------------------------------


class TestHistogramEqualize:
    def test_ramp_is_fixed_point(self):
        ramp = ramp_image()
        npt.assert_array_equal(histogram_equalize(ramp), ramp)

    def test_two_level_image_maps_to_extremes(self):
        img = np.full((8, 8), 100, dtype=np.uint8)
        img[:, 4:] = 200
        out = histogram_equalize(img)
        assert set(np.unique(out)) == {0, 255}

    def test_three_level_image_matches_oracle(self):
        img = np.array(
            [[10, 10, 10, 80, 80, 80, 80, 200]] * 8, dtype=np.uint8
        )
        npt.assert_array_equal(histogram_equalize(img), histeq_oracle(img))

    @pytest.mark.parametrize("seed", range(20))
    def test_random_images_match_oracle(self, seed):
        img = random_image(np.random.default_rng(seed), 12, 9)
        npt.assert_array_equal(histogram_equalize(img), histeq_oracle(img))

    def test_single_intensity_unchanged(self):
        img = np.full((5, 5), 77, dtype=np.uint8)
        npt.assert_array_equal(histogram_equalize(img), img)

    @pytest.mark.parametrize("seed", range(8))
    def test_mapping_is_monotone(self, seed):
        img = random_image(np.random.default_rng(100 + seed), 10, 10)
        out = histogram_equalize(img)
        mapping = {}
        for v, o in zip(img.ravel(), out.ravel()):
            mapping[int(v)] = int(o)
        values = sorted(mapping)
        assert all(
            mapping[a] <= mapping[b] for a, b in zip(values, values[1:])
        )


# --- local ternary pattern -------------------------------------------------


class TestLocalTernaryPattern:
    def test_constant_image_all_zero_codes(self):
        img = np.full((6, 6), 42, dtype=np.uint8)
        maps = local_ternary_pattern(img, t=0)
        assert not maps.upper.any() and not maps.lower.any()

    def test_bright_neighbors_set_every_upper_bit(self):
        img = np.full((3, 3), 255, dtype=np.uint8)
        img[1, 1] = 100
        maps = local_ternary_pattern(img, t=0)
        assert maps.upper[1, 1] == 0xFF
        assert maps.lower[1, 1] == 0x00

    @pytest.mark.parametrize("seed", range(20))
    def test_random_images_match_oracle(self, seed):
        img = random_image(np.random.default_rng(seed), 6, 6)
        maps = local_ternary_pattern(img, t=5)
        upper, lower = ltp_oracle(img, 5)
        npt.assert_array_equal(maps.upper, upper)
        npt.assert_array_equal(maps.lower, lower)

    @pytest.mark.parametrize("seed,t", [(s, t) for s in range(6) for t in (0, 3, 17)])
    def test_upper_lower_disjoint(self, seed, t):
        img = random_image(np.random.default_rng(200 + seed), 8, 11)
        maps = local_ternary_pattern(img, t=t)
        assert not (maps.upper & maps.lower).any()
        assert maps.upper.shape == img.shape == maps.lower.shape

    def test_rejects_small_images(self):
        with pytest.raises(ValueError, match="3x3"):
            local_ternary_pattern(np.zeros((2, 8), dtype=np.uint8))

    def test_rejects_negative_band(self):
        with pytest.raises(ValueError, match="non-negative"):
            local_ternary_pattern(np.zeros((4, 4), dtype=np.uint8), t=-1)


# --- adaptive Gaussian threshold -------------------------------------------


class TestAdaptiveThreshold:
    def test_constant_image_offsets(self):
        img = np.full((9, 9), 120, dtype=np.uint8)
        assert (adaptive_threshold_gaussian(img, 3, 2.0) == 255).all()
        assert (adaptive_threshold_gaussian(img, 3, -2.0) == 0).all()

    def test_step_edge_matches_oracle(self):
        img = np.full((8, 8), 30, dtype=np.uint8)
        img[:, 4:] = 220
        npt.assert_array_equal(
            adaptive_threshold_gaussian(img, 3, 2.0),
            gaussian_threshold_oracle(img, 3, 2.0),
        )

    @pytest.mark.parametrize("seed,block", [(s, b) for s in range(7) for b in (3, 5, 11)])
    def test_random_images_match_oracle(self, seed, block):
        img = random_image(np.random.default_rng(300 + seed), 13, 16)
        npt.assert_array_equal(
            adaptive_threshold_gaussian(img, block, 2.0),
            gaussian_threshold_oracle(img, block, 2.0),
        )

    @pytest.mark.parametrize("seed", range(5))
    def test_output_strictly_binary(self, seed):
        img = random_image(np.random.default_rng(400 + seed), 20, 20)
        out = adaptive_threshold_gaussian(img, 11, 2.0)
        assert set(np.unique(out)) <= {0, 255}
        assert out.shape == img.shape

    @pytest.mark.parametrize("block", [2, 4, 1, 0])
    def test_rejects_bad_block(self, block):
        with pytest.raises(ValueError, match="odd"):
            adaptive_threshold_gaussian(random_image(np.random.default_rng(5)), block, 2.0)

    def test_rejects_oversized_block(self):
        with pytest.raises(ValueError, match="too large"):
            adaptive_threshold_gaussian(np.zeros((4, 4), dtype=np.uint8), 11, 2.0)

    def test_kernel_normalized(self):
        k = gaussian_kernel_1d(11)
        assert k.shape == (11,)
        npt.assert_allclose(k.sum(), 1.0, atol=1e-12)
        npt.assert_allclose(k, k[::-1])  # symmetric


# --- hybrid -----------------------------------------------------------------


class TestHybrid:
    def test_constant_image(self):
        img = np.full((9, 9), 90, dtype=np.uint8)
        assert (hybrid_preprocess(img, 3, 2.0) == 255).all()

    def test_equals_manual_composition(self):
        img = ramp_image()
        expected = adaptive_threshold_gaussian(histogram_equalize(img), 5, 2.0)
        npt.assert_array_equal(hybrid_preprocess(img, 5, 2.0), expected)

    @pytest.mark.parametrize("seed", range(5))
    def test_always_binary(self, seed):
        img = random_image(np.random.default_rng(500 + seed), 15, 12)
        assert set(np.unique(hybrid_preprocess(img, 11, 2.0))) <= {0, 255}


# --- misc -------------------------------------------------------------------


class TestGrayConversion:
    def test_luma_weights(self):
        rgb = np.zeros((1, 3, 3), dtype=np.uint8)
        rgb[0, 0] = (255, 0, 0)
        rgb[0, 1] = (0, 255, 0)
        rgb[0, 2] = (255, 255, 255)
        out = rgb_to_gray(rgb)
        assert out[0, 0] == 76  # round(0.299 * 255)
        assert out[0, 1] == 150  # round(0.587 * 255)
        assert out[0, 2] == 255

    def test_rejects_2d(self):
        with pytest.raises(ValueError, match="RGB"):
            rgb_to_gray(np.zeros((4, 4), dtype=np.uint8))


class TestOperatorRegistry:
    def test_unknown_name_lists_valid(self):
        with pytest.raises(ValueError, match="histeq"):
            apply_operator("blur", ramp_image())

    def test_ltp_variants(self):
        img = random_image(np.random.default_rng(7), 8, 8)
        maps = local_ternary_pattern(img, t=2)
        npt.assert_array_equal(apply_operator("ltp_upper", img, {"t": 2}), maps.upper)
        npt.assert_array_equal(apply_operator("ltp_lower", img, {"t": 2}), maps.lower)

    def test_identity(self):
        img = random_image(np.random.default_rng(8))
        npt.assert_array_equal(apply_operator("identity", img), img)

    def test_rejects_out_of_range_values(self):
        with pytest.raises(ValueError, match="0, 255"):
            histogram_equalize(np.array([[300]], dtype=np.int32))
