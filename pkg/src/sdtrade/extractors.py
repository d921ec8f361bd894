"""The feature extractors under study and their configurations.

Four extractors are provided:

* rounding quantizer (``toy_quantize``): rounds every coordinate to the
  nearest integer; detection is by exact feature match.
* sliding-window hash (``blacklight_extract``): bins pixels, hashes every
  window with SHA-256, keeps the numerically smallest ``top_k`` digests.
* perceptual hash (``piha_extract``): Gaussian blur, hue plane, sum pooling,
  then local binary patterns.
* linear map (``linear_extract``): a full-row-rank matrix with exactly known
  extreme singular values, so its distance-distortion constants are exact.

Extractors are immutable after construction; extraction and distance are pure
and callable concurrently.
"""

from __future__ import annotations

import hashlib
import heapq
import json
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DimensionMismatch, WindowTooLarge
from .features import (
    BitString,
    DigestSet,
    Feature,
    IntVector,
    RealVector,
    feature_distance,
)
from .imagekit import Image, gaussian_blur_3x3, lbp, rgb_to_hue, sum_pool

__all__ = [
    "ToyConfig",
    "BlacklightConfig",
    "PihaConfig",
    "LinearConfig",
    "ExtractorConfig",
    "LinearExtractor",
    "toy_quantize",
    "blacklight_extract",
    "piha_extract",
    "linear_extract",
    "feature_distance",
    "config_fingerprint",
    "make_extractor",
]


@dataclass(frozen=True)
class ToyConfig:
    """Rounding quantizer; no parameters."""


@dataclass(frozen=True)
class BlacklightConfig:
    bin_size: int = 50
    window: int = 20
    stride: int = 1
    top_k: int = 50

    def __post_init__(self):
        for name in ("bin_size", "window", "stride", "top_k"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")


@dataclass(frozen=True)
class PihaConfig:
    sigma: float = 1.0
    block: int = 7

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.block < 1:
            raise ValueError(f"block must be positive, got {self.block}")


@dataclass(frozen=True)
class LinearConfig:
    """Seeded construction recipe for a linear extractor.

    ``condition_number=None`` draws a raw Gaussian matrix and measures its
    singular values; otherwise the matrix is built with singular values spaced
    between ``scale`` and ``scale * condition_number`` exactly.
    """

    seed: int
    input_dim: int
    output_dim: int
    condition_number: float | None = None
    scale: float = 1.0

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("input_dim and output_dim must be positive")
        if self.output_dim > self.input_dim:
            raise ValueError("output_dim cannot exceed input_dim (rank deficiency)")
        if self.condition_number is not None and self.condition_number < 1:
            raise ValueError(f"condition_number must be >= 1, got {self.condition_number}")
        if self.scale <= 0:
            raise ValueError(f"scale must be positive, got {self.scale}")


ExtractorConfig = Union[ToyConfig, BlacklightConfig, PihaConfig, LinearConfig]


def toy_quantize(x) -> IntVector:
    """Round every coordinate half-up to the nearest integer: floor(x + 0.5)."""
    arr = np.asarray(x, dtype=np.float64)
    return IntVector(np.floor(arr + 0.5).astype(np.int64))


def _window_digests(img: Image, cfg: BlacklightConfig) -> list[bytes]:
    """SHA-256 digest of every sliding window of binned pixels, in window order."""
    flat = img.flat()
    if cfg.window > flat.size:
        raise WindowTooLarge(f"window {cfg.window} > flattened length {flat.size}")
    binned = (flat // cfg.bin_size).astype(np.uint8)
    buf = binned.tobytes()
    sha256 = hashlib.sha256
    w = cfg.window
    return [
        sha256(buf[i : i + w]).digest() for i in range(0, len(buf) - w + 1, cfg.stride)
    ]


def blacklight_extract(img: Image, cfg: BlacklightConfig) -> DigestSet:
    """Sliding-window SHA-256 feature of the binned pixel stream.

    Pixels are flattened row-major channel-interleaved and binned by
    ``bin_size``; each window of ``window`` bin indices (one unsigned byte
    each) is hashed; the ``top_k`` numerically smallest digests (as big-endian
    256-bit integers) form the feature. Lexicographic byte order equals
    big-endian integer order for fixed-length digests.
    """
    unique = set(_window_digests(img, cfg))
    if len(unique) > cfg.top_k:
        unique = heapq.nsmallest(cfg.top_k, unique)
    return DigestSet(digests=frozenset(unique), top_k=cfg.top_k)


def piha_extract(img: Image, cfg: PihaConfig) -> BitString:
    """Perceptual hash: blur, hue plane, sum pool, local binary patterns."""
    blurred = gaussian_blur_3x3(img, cfg.sigma)
    hue = rgb_to_hue(blurred)
    pooled = sum_pool(hue, cfg.block)
    return lbp(pooled)


@dataclass(frozen=True, eq=False)
class LinearExtractor:
    """Linear map x -> Mx with exactly known extreme singular values.

    For a square full-rank matrix the two-sided distance bound

        sigma_min * |x1 - x2| <= |M x1 - M x2| <= sigma_max * |x1 - x2|

    holds for all pairs. For output_dim < input_dim the map has a nontrivial
    kernel and the lower constant only applies to pairs outside it, so
    experiments default to square matrices.
    """

    matrix: np.ndarray
    sigma_min: float
    sigma_max: float

    def __post_init__(self):
        if self.matrix.ndim != 2:
            raise ValueError("matrix must be 2-d")
        if self.sigma_min <= 0:
            raise ValueError("matrix must have full row rank (sigma_min > 0)")

    @property
    def input_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def output_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def lipschitz_ratio(self) -> float:
        return self.sigma_max / self.sigma_min

    @classmethod
    def from_matrix(cls, matrix) -> "LinearExtractor":
        m = np.asarray(matrix, dtype=np.float64)
        singulars = np.linalg.svd(m, compute_uv=False)
        smin, smax = float(singulars.min()), float(singulars.max())
        if smin <= 0:
            raise ValueError("matrix must have full row rank (sigma_min > 0)")
        return cls(matrix=m, sigma_min=smin, sigma_max=smax)

    @classmethod
    def scaling(cls, c: float, d: int) -> "LinearExtractor":
        """The map x -> c*x; both distortion constants equal c exactly."""
        if c <= 0:
            raise ValueError(f"scale must be positive, got {c}")
        return cls(matrix=c * np.eye(d), sigma_min=float(c), sigma_max=float(c))

    @classmethod
    def from_config(cls, cfg: LinearConfig) -> "LinearExtractor":
        gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed)))
        d, y = cfg.input_dim, cfg.output_dim
        if cfg.condition_number is None:
            return cls.from_matrix(gen.standard_normal((y, d)))
        # U diag(s) W with orthogonal factors gives singular values exactly s.
        u, _ = np.linalg.qr(gen.standard_normal((y, y)))
        q, _ = np.linalg.qr(gen.standard_normal((d, y)))
        if cfg.condition_number == 1:
            s = np.full(y, cfg.scale)
        else:
            s = np.geomspace(cfg.scale, cfg.scale * cfg.condition_number, y)
        matrix = (u * s) @ q.T
        return cls(
            matrix=matrix,
            sigma_min=float(cfg.scale),
            sigma_max=float(cfg.scale * cfg.condition_number),
        )


def linear_extract(x, ext: LinearExtractor) -> RealVector:
    """Apply the linear map; raises DimensionMismatch on wrong input length."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.shape != (ext.input_dim,):
        raise DimensionMismatch(f"expected length {ext.input_dim}, got {arr.shape}")
    return RealVector(ext.matrix @ arr)


def _config_dict(cfg: ExtractorConfig) -> dict:
    if isinstance(cfg, ToyConfig):
        return {"kind": "toy"}
    if isinstance(cfg, BlacklightConfig):
        return {
            "kind": "blacklight",
            "bin_size": cfg.bin_size,
            "window": cfg.window,
            "stride": cfg.stride,
            "top_k": cfg.top_k,
        }
    if isinstance(cfg, PihaConfig):
        return {"kind": "piha", "sigma": cfg.sigma, "block": cfg.block}
    if isinstance(cfg, LinearConfig):
        return {
            "kind": "linear",
            "seed": cfg.seed,
            "input_dim": cfg.input_dim,
            "output_dim": cfg.output_dim,
            "condition_number": cfg.condition_number,
            "scale": cfg.scale,
        }
    raise TypeError(f"unsupported config type {type(cfg).__name__}")


def config_fingerprint(cfg: ExtractorConfig) -> str:
    """SHA-256 hex digest of the canonical JSON encoding of a config."""
    canon = json.dumps(_config_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("ascii")).hexdigest()


class Extractor:
    """Uniform handle over one configured extractor.

    ``extract_image`` accepts an :class:`Image`; ``extract_vector`` accepts a
    real vector. Not every extractor supports both; unsupported calls raise
    TypeError.
    """

    def __init__(self, config: ExtractorConfig):
        self.config = config
        if isinstance(config, LinearConfig):
            self.linear = LinearExtractor.from_config(config)
        else:
            self.linear = None

    @property
    def name(self) -> str:
        return _config_dict(self.config)["kind"]

    @property
    def takes_images(self) -> bool:
        return isinstance(self.config, (ToyConfig, BlacklightConfig, PihaConfig))

    def fingerprint(self) -> str:
        return config_fingerprint(self.config)

    def extract_image(self, img: Image) -> Feature:
        cfg = self.config
        if isinstance(cfg, ToyConfig):
            return toy_quantize(img.flat().astype(np.float64))
        if isinstance(cfg, BlacklightConfig):
            return blacklight_extract(img, cfg)
        if isinstance(cfg, PihaConfig):
            return piha_extract(img, cfg)
        raise TypeError(f"{self.name} extractor does not consume images")

    def extract_vector(self, x) -> Feature:
        cfg = self.config
        if isinstance(cfg, ToyConfig):
            return toy_quantize(x)
        if isinstance(cfg, LinearConfig):
            return linear_extract(x, self.linear)
        raise TypeError(f"{self.name} extractor does not consume real vectors")


def make_extractor(cfg: ExtractorConfig) -> Extractor:
    return Extractor(cfg)
