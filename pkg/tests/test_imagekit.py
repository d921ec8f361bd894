"""Pixel primitives against hand-evaluated oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdtrade.errors import ChannelMismatch, EmptyOutput, TooSmall
from sdtrade.imagekit import (
    GrayPlane,
    Image,
    gaussian_blur_3x3,
    gaussian_kernel_3x3,
    lbp,
    rgb_to_hue,
    sum_pool,
)


def _rand_image(shape, seed=0):
    gen = np.random.default_rng(seed)
    return Image(gen.integers(0, 256, size=shape, dtype=np.uint8))


class TestImageType:
    def test_validates_dtype_and_shape(self):
        with pytest.raises(ValueError):
            Image(np.zeros((4, 4, 3), dtype=np.float64))
        with pytest.raises(ValueError):
            Image(np.zeros((4, 4, 2), dtype=np.uint8))
        with pytest.raises(ValueError):
            Image(np.zeros((4, 4), dtype=np.uint8))

    def test_flat_is_channel_interleaved(self):
        img = _rand_image((2, 3, 3))
        flat = img.flat()
        assert flat[0] == img.pixels[0, 0, 0]
        assert flat[1] == img.pixels[0, 0, 1]
        assert flat[3] == img.pixels[0, 1, 0]


class TestGaussianBlur:
    def test_kernel_normalized_and_center_weight(self):
        # hand oracle: Z = 1 + 4 e^{-1/2} + 4 e^{-1} for sigma = 1
        z = 1.0 + 4.0 * math.exp(-0.5) + 4.0 * math.exp(-1.0)
        kernel = gaussian_kernel_3x3(1.0)
        assert kernel.sum() == pytest.approx(1.0, abs=1e-12)
        assert kernel[1, 1] == pytest.approx(math.exp(0.0) / z, abs=1e-12)
        assert kernel[1, 1] == pytest.approx(0.2042, abs=5e-5)

    def test_constant_image_unchanged(self):
        img = Image(np.full((7, 9, 3), 128, dtype=np.uint8))
        assert gaussian_blur_3x3(img, 1.0) == img

    def test_single_white_pixel_spreads_like_kernel(self):
        # direct convolution by hand on a 5x5 test image
        pixels = np.zeros((5, 5, 1), dtype=np.uint8)
        pixels[2, 2, 0] = 255
        out = gaussian_blur_3x3(Image(pixels), 1.0)
        kernel = gaussian_kernel_3x3(1.0)
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                expected = math.floor(255.0 * kernel[1 + di, 1 + dj] + 0.5)
                assert out.pixels[2 + di, 2 + dj, 0] == expected
        assert out.pixels[0, 0, 0] == 0
        assert out.pixels[4, 4, 0] == 0

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_never_widens_value_range(self, seed):
        img = _rand_image((6, 5, 3), seed)
        out = gaussian_blur_3x3(img, 0.8)
        assert out.pixels.min() >= img.pixels.min()
        assert out.pixels.max() <= img.pixels.max()

    def test_rejects_nonpositive_sigma(self):
        with pytest.raises(ValueError):
            gaussian_blur_3x3(_rand_image((3, 3, 1)), 0.0)


class TestRgbToHue:
    def test_primary_colors(self):
        img = Image(np.array([[[255, 0, 0], [0, 255, 0], [0, 0, 255]]], dtype=np.uint8))
        hue = rgb_to_hue(img).values[0]
        assert hue[0] == pytest.approx(0.0, abs=1e-12)
        assert hue[1] == pytest.approx(85.0, abs=1e-12)  # 120 deg * 255 / 360
        assert hue[2] == pytest.approx(170.0, abs=1e-12)

    def test_achromatic_pixels_map_to_zero(self):
        img = Image(np.full((2, 2, 3), 77, dtype=np.uint8))
        assert np.all(rgb_to_hue(img).values == 0.0)

    def test_channel_mismatch(self):
        with pytest.raises(ChannelMismatch):
            rgb_to_hue(_rand_image((4, 4, 1)))

    def test_range_is_half_open(self):
        # hue just below 360 degrees must stay below 255
        img = Image(np.array([[[255, 0, 1]]], dtype=np.uint8))
        val = rgb_to_hue(img).values[0, 0]
        assert 0.0 <= val < 255.0
        assert val > 254.0

    @given(st.integers(0, 254), st.floats(min_value=0.35, max_value=1.0))
    @settings(max_examples=50, deadline=None)
    def test_brightness_scaling_invariance(self, third, c):
        # saturated chromatic pixel: hue moves by at most 1 (circularly) under
        # uniform brightness scaling with 8-bit re-rounding, provided the
        # scaled chroma stays large
        base = np.array([255, third, 0], dtype=np.float64)
        scaled = np.floor(c * base + 0.5).astype(np.uint8)
        img1 = Image(base.astype(np.uint8).reshape(1, 1, 3))
        img2 = Image(scaled.reshape(1, 1, 3))
        h1 = rgb_to_hue(img1).values[0, 0]
        h2 = rgb_to_hue(img2).values[0, 0]
        diff = abs(h1 - h2)
        assert min(diff, 255.0 - diff) <= 1.0


class TestSumPool:
    def test_all_ones_block(self):
        plane = GrayPlane(np.ones((7, 7)))
        out = sum_pool(plane, 7)
        assert out.values.shape == (1, 1)
        assert out.values[0, 0] == 49.0

    def test_floor_dimensions(self):
        plane = GrayPlane(np.zeros((32, 32)))
        assert sum_pool(plane, 7).values.shape == (4, 4)

    def test_identity_diagonal_counts(self):
        # hand enumeration: the two diagonal blocks hold 7 ones each, the two
        # off-diagonal blocks hold none
        plane = GrayPlane(np.eye(14))
        out = sum_pool(plane, 7)
        assert np.array_equal(out.values, np.array([[7.0, 0.0], [0.0, 7.0]]))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_block_one_is_identity(self, seed):
        gen = np.random.default_rng(seed)
        plane = GrayPlane(gen.standard_normal((5, 8)))
        assert sum_pool(plane, 1) == plane

    def test_empty_output_rejected(self):
        with pytest.raises(EmptyOutput):
            sum_pool(GrayPlane(np.zeros((2, 9))), 7)


class TestLbp:
    def test_constant_plane_all_ones_codes(self):
        # every neighbor >= center under the equality convention
        out = lbp(GrayPlane(np.full((4, 5), 3.0)))
        assert out.n_bits == 8 * 2 * 3
        assert all(byte == 0xFF for byte in out.packed)

    def test_peak_center_all_zero_code(self):
        plane = np.zeros((3, 3))
        plane[1, 1] = 255.0
        out = lbp(GrayPlane(plane))
        assert out.packed == b"\x00"

    def test_ramp_code_fixes_bit_order(self):
        # hand enumeration for center 5 of [[1,2,3],[4,5,6],[7,8,9]]:
        # clockwise from top-left the comparisons are 0,0,0,1,1,1,1,0 and the
        # first neighbor is the MSB, so the code is 0b00011110 = 30
        plane = GrayPlane(np.arange(1.0, 10.0).reshape(3, 3))
        out = lbp(plane)
        assert out.n_bits == 8
        assert out.packed == bytes([0b00011110])

    @given(st.integers(3, 9), st.integers(3, 9), st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_output_length(self, h, w, seed):
        gen = np.random.default_rng(seed)
        out = lbp(GrayPlane(gen.standard_normal((h, w))))
        assert out.n_bits == 8 * (h - 2) * (w - 2)

    def test_too_small(self):
        with pytest.raises(TooSmall):
            lbp(GrayPlane(np.zeros((2, 5))))
