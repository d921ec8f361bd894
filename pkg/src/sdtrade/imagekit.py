"""Image containers and the pixel-level primitives of the perceptual-hash pipeline.

All operations are pure functions of their inputs and are safe to call from
any number of concurrent workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ChannelMismatch, EmptyOutput, TooSmall
from .features import BitString


@dataclass(frozen=True, eq=False)
class Image:
    """8-bit image, shape (height, width, channels) with 1 or 3 channels.

    The flattened pixel order is row-major and channel-interleaved, which is
    the order the sliding-window hash consumes.
    """

    pixels: np.ndarray

    def __post_init__(self):
        p = self.pixels
        if not isinstance(p, np.ndarray) or p.dtype != np.uint8:
            raise ValueError("pixels must be a uint8 ndarray")
        if p.ndim != 3 or p.shape[2] not in (1, 3):
            raise ValueError(f"expected shape (h, w, 1|3), got {p.shape}")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError(f"empty image shape {p.shape}")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    def flat(self) -> np.ndarray:
        """Row-major channel-interleaved pixel vector."""
        return self.pixels.reshape(-1)

    def __eq__(self, other):
        return isinstance(other, Image) and np.array_equal(self.pixels, other.pixels)


@dataclass(frozen=True, eq=False)
class GrayPlane:
    """Single real-valued plane, shape (height, width)."""

    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if not isinstance(v, np.ndarray) or v.ndim != 2:
            raise ValueError("values must be a 2-d ndarray")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"empty plane shape {v.shape}")
        if v.dtype != np.float64:
            object.__setattr__(self, "values", v.astype(np.float64))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def __eq__(self, other):
        return isinstance(other, GrayPlane) and np.array_equal(self.values, other.values)


def gaussian_kernel_3x3(sigma: float) -> np.ndarray:
    """Normalized 3x3 Gaussian kernel, k(i,j) proportional to exp(-(i²+j²)/(2σ²))."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    offsets = np.array([-1.0, 0.0, 1.0])
    sq = offsets[:, None] ** 2 + offsets[None, :] ** 2
    kernel = np.exp(-sq / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def gaussian_blur_3x3(img: Image, sigma: float) -> Image:
    """Convolve each channel with the normalized 3x3 Gaussian kernel.

    Borders use replicate padding; outputs are rounded half-up and clamped to
    [0, 255]. Because the kernel is a convex combination, the output range
    never widens beyond the input range.
    """
    kernel = gaussian_kernel_3x3(sigma)
    padded = np.pad(img.pixels.astype(np.float64), ((1, 1), (1, 1), (0, 0)), mode="edge")
    h, w = img.height, img.width
    out = np.zeros((h, w, img.channels), dtype=np.float64)
    for di in range(3):
        for dj in range(3):
            out += kernel[di, dj] * padded[di : di + h, dj : dj + w, :]
    out = np.clip(np.floor(out + 0.5), 0, 255)
    return Image(out.astype(np.uint8))


def rgb_to_hue(img: Image) -> GrayPlane:
    """Hue channel of the RGB->HSV conversion, rescaled from [0°,360°) to [0,255).

    Achromatic pixels (max == min) map to hue 0. Saturation and value are
    discarded.
    """
    if img.channels != 3:
        raise ChannelMismatch(f"hue needs 3 channels, got {img.channels}")
    rgb = img.pixels.astype(np.float64)
    r, g, b = rgb[:, :, 0], rgb[:, :, 1], rgb[:, :, 2]
    mx = np.max(rgb, axis=2)
    mn = np.min(rgb, axis=2)
    delta = mx - mn
    safe = np.where(delta == 0, 1.0, delta)
    hue = np.zeros_like(mx)
    red_max = (mx == r) & (delta > 0)
    green_max = (mx == g) & (delta > 0) & ~red_max
    blue_max = (delta > 0) & ~red_max & ~green_max
    hue = np.where(red_max, np.mod((g - b) / safe, 6.0), hue)
    hue = np.where(green_max, (b - r) / safe + 2.0, hue)
    hue = np.where(blue_max, (r - g) / safe + 4.0, hue)
    return GrayPlane(hue * 60.0 * 255.0 / 360.0)


def sum_pool(plane: GrayPlane, block: int) -> GrayPlane:
    """Sum over non-overlapping block x block tiles.

    Trailing rows/columns that do not fill a whole block are discarded, so the
    output is floor(h/block) x floor(w/block).
    """
    if block < 1:
        raise ValueError(f"block must be positive, got {block}")
    bh, bw = plane.height // block, plane.width // block
    if bh == 0 or bw == 0:
        raise EmptyOutput(
            f"{plane.height}x{plane.width} plane pools to {bh}x{bw} with block {block}"
        )
    trimmed = plane.values[: bh * block, : bw * block]
    pooled = trimmed.reshape(bh, block, bw, block).sum(axis=(1, 3))
    return GrayPlane(pooled)


# Neighbor offsets clockwise from the top-left; the first neighbor becomes the
# MSB of each 8-bit code.
_LBP_OFFSETS = [(-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1)]


def lbp(plane: GrayPlane) -> BitString:
    """Local binary pattern codes of all interior pixels, packed row-major.

    Each interior pixel yields an 8-bit code: bit b is 1 iff the b-th neighbor
    (clockwise from top-left) is >= the center. Output length is
    8 * (h-2) * (w-2) bits.
    """
    v = plane.values
    h, w = plane.height, plane.width
    if h < 3 or w < 3:
        raise TooSmall(f"lbp needs at least 3x3, got {h}x{w}")
    center = v[1 : h - 1, 1 : w - 1]
    bits = np.empty((h - 2, w - 2, 8), dtype=bool)
    for b, (di, dj) in enumerate(_LBP_OFFSETS):
        bits[:, :, b] = v[1 + di : h - 1 + di, 1 + dj : w - 1 + dj] >= center
    packed = np.packbits(bits.reshape(-1))
    return BitString(packed=packed.tobytes(), n_bits=8 * (h - 2) * (w - 2))
