"""Dataset ingestion, synthetic data generation, and the feature cache.

Only lossless formats are ingested (CIFAR-10 binary batches, PNG, PPM); lossy
codecs would make the hashes decoder-dependent. Cache writes go through an
atomic rename so readers never observe a partial file.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image as PILImage, UnidentifiedImageError

from .errors import (
    BadRecordLength,
    DecodeError,
    EmptyDataset,
    FileMissing,
    FingerprintMismatch,
    MixedDimensions,
)
from .extractors import ExtractorConfig, config_fingerprint, make_extractor
from .features import Feature, feature_from_record, feature_to_record
from .imagekit import Image
from .sampling import RngLike, as_generator

CIFAR_RECORD_BYTES = 3073  # 1 label byte + 32*32*3 pixel bytes, channel-planar
_CACHE_VERSION = 1


@dataclass
class DatasetHandle:
    """In-memory image collection with stable per-image ids."""

    kind: str
    source: str
    images: list[Image] = field(default_factory=list)
    ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        if len(self.images) != len(self.ids):
            raise ValueError("images and ids must have equal length")
        if self.images:
            dims = self.images[0].pixels.shape
            for img in self.images:
                if img.pixels.shape != dims:
                    raise MixedDimensions(
                        f"image shapes differ: {img.pixels.shape} vs {dims}"
                    )

    @property
    def count(self) -> int:
        return len(self.images)

    @property
    def dims(self) -> tuple[int, int, int]:
        if not self.images:
            raise EmptyDataset("dataset holds no images")
        return self.images[0].pixels.shape


def _sample_indices(total: int, n: int, rng: RngLike) -> np.ndarray:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n > total:
        raise ValueError(f"requested {n} images but only {total} available")
    return as_generator(rng).choice(total, size=n, replace=False)


def load_cifar10(root, n: int, rng: RngLike) -> DatasetHandle:
    """Sample n images without replacement from CIFAR-10 binary batch files.

    Each 3073-byte record is one label byte followed by 3072 pixel bytes in
    channel-planar order (all red, all green, all blue); pixels are reordered
    to channel-interleaved on load.
    """
    root = Path(root)
    if not root.exists():
        raise FileMissing(f"dataset root {root} does not exist")
    batch_files = sorted(root.glob("*.bin"))
    if not batch_files:
        raise FileMissing(f"no .bin batch files under {root}")
    records: list[tuple[str, bytes]] = []
    for path in batch_files:
        blob = path.read_bytes()
        if len(blob) == 0 or len(blob) % CIFAR_RECORD_BYTES != 0:
            raise BadRecordLength(
                f"{path} holds {len(blob)} bytes, not a multiple of {CIFAR_RECORD_BYTES}"
            )
        for i in range(len(blob) // CIFAR_RECORD_BYTES):
            rec = blob[i * CIFAR_RECORD_BYTES : (i + 1) * CIFAR_RECORD_BYTES]
            records.append((f"{path.name}:{i}", rec))
    chosen = _sample_indices(len(records), n, rng)
    images, ids = [], []
    for idx in chosen:
        rec_id, rec = records[int(idx)]
        planar = np.frombuffer(rec[1:], dtype=np.uint8).reshape(3, 32, 32)
        images.append(Image(np.ascontiguousarray(planar.transpose(1, 2, 0))))
        ids.append(rec_id)
    return DatasetHandle(kind="cifar10_binary", source=str(root), images=images, ids=ids)


def write_cifar10_batch(path, images: list[Image], labels=None) -> None:
    """Write 32x32x3 images as one CIFAR-10 binary batch file."""
    path = Path(path)
    if labels is None:
        labels = [0] * len(images)
    with open(path, "wb") as fh:
        for img, label in zip(images, labels):
            if img.pixels.shape != (32, 32, 3):
                raise ValueError(f"CIFAR-10 records are 32x32x3, got {img.pixels.shape}")
            fh.write(bytes([label & 0xFF]))
            fh.write(np.ascontiguousarray(img.pixels.transpose(2, 0, 1)).tobytes())


_LOSSLESS_SUFFIXES = (".png", ".ppm")


def load_image_dir(root, n: int, rng: RngLike) -> DatasetHandle:
    """Sample n images from a directory of PNG/PPM files decodable to 8-bit RGB."""
    root = Path(root)
    if not root.is_dir():
        raise FileMissing(f"image directory {root} does not exist")
    paths = sorted(p for p in root.iterdir() if p.suffix.lower() in _LOSSLESS_SUFFIXES)
    if not paths:
        raise FileMissing(f"no {'/'.join(_LOSSLESS_SUFFIXES)} files under {root}")
    chosen = _sample_indices(len(paths), n, rng)
    images, ids = [], []
    dims = None
    for idx in chosen:
        path = paths[int(idx)]
        try:
            with PILImage.open(path) as pil:
                if pil.mode not in ("RGB", "L", "P"):
                    raise DecodeError(f"{path} has unsupported mode {pil.mode}")
                arr = np.asarray(pil.convert("RGB"), dtype=np.uint8)
        except (UnidentifiedImageError, OSError, SyntaxError) as exc:
            raise DecodeError(f"cannot decode {path}: {exc}") from exc
        if dims is None:
            dims = arr.shape
        elif arr.shape != dims:
            raise MixedDimensions(f"{path} is {arr.shape}, expected {dims}")
        images.append(Image(arr))
        ids.append(path.name)
    return DatasetHandle(kind="image_dir", source=str(root), images=images, ids=ids)


def synthesize(kind: str, dims: tuple[int, int, int], n: int, params: dict, rng: RngLike) -> DatasetHandle:
    """Generate a synthetic dataset.

    ``grid_gaussian``: each image is a distinct per-pixel draw of bin-center
    values (centers bin_size/2 + j*bin_size) plus N(0, sigma²) noise, rounded
    half-up and clamped. With sigma -> 0 the images sit exactly at the
    centers. ``random_texture``: independent uniform pixels.
    """
    h, w, c = dims
    if h < 1 or w < 1 or c not in (1, 3):
        raise ValueError(f"bad dims {dims}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    gen = as_generator(rng)
    images, ids = [], []
    if kind == "random_texture":
        for i in range(n):
            images.append(Image(gen.integers(0, 256, size=(h, w, c), dtype=np.uint8)))
            ids.append(f"random_texture:{i}")
    elif kind == "grid_gaussian":
        sigma = float(params.get("sigma", 1.0))
        bin_size = int(params.get("bin_size", 50))
        if sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {sigma}")
        if bin_size < 1 or bin_size > 255:
            raise ValueError(f"bin_size must be in [1, 255], got {bin_size}")
        n_centers = 256 // bin_size
        center_values = bin_size // 2 + bin_size * np.arange(n_centers)
        seen: set[bytes] = set()
        if n > n_centers ** (h * w * c):
            raise ValueError(f"cannot draw {n} distinct center grids from this space")
        i = 0
        while len(images) < n:
            centers = gen.choice(center_values, size=(h, w, c))
            key = centers.astype(np.uint8).tobytes()
            if key in seen:
                continue
            seen.add(key)
            noisy = centers + sigma * gen.standard_normal((h, w, c))
            pixels = np.clip(np.floor(noisy + 0.5), 0, 255).astype(np.uint8)
            images.append(Image(pixels))
            ids.append(f"grid_gaussian:{i}")
            i += 1
    else:
        raise ValueError(f"unknown synthetic kind {kind!r}")
    return DatasetHandle(kind="synthetic", source=f"synthetic:{kind}", images=images, ids=ids)


@dataclass
class FeatureCache:
    """Features keyed by image id, tied to one extractor fingerprint."""

    path: Path
    fingerprint: str
    features: dict[str, Feature]


def cache_features(handle: DatasetHandle, extractor_cfg: ExtractorConfig, path) -> FeatureCache:
    """Load the feature cache at ``path`` on a fingerprint hit, else build it.

    The cache is JSON lines: a header object {extractor_fingerprint, version}
    followed by one {id, feature} record per image. A header whose fingerprint
    does not match the requested configuration raises FingerprintMismatch
    rather than silently serving stale features.
    """
    path = Path(path)
    fingerprint = config_fingerprint(extractor_cfg)
    if path.exists():
        with open(path, "r", encoding="ascii") as fh:
            header = json.loads(fh.readline())
            if header.get("extractor_fingerprint") != fingerprint:
                raise FingerprintMismatch(
                    f"cache {path} was built with fingerprint "
                    f"{header.get('extractor_fingerprint')!r}, expected {fingerprint!r}"
                )
            features = {}
            for line in fh:
                record = json.loads(line)
                features[record["id"]] = feature_from_record(record["feature"])
        return FeatureCache(path=path, fingerprint=fingerprint, features=features)

    extractor = make_extractor(extractor_cfg)
    features = {
        image_id: extractor.extract_image(img)
        for image_id, img in zip(handle.ids, handle.images)
    }
    tmp = path.with_name(path.name + f".tmp-{os.getpid()}")
    with open(tmp, "w", encoding="ascii") as fh:
        fh.write(json.dumps({"extractor_fingerprint": fingerprint, "version": _CACHE_VERSION}))
        fh.write("\n")
        for image_id in handle.ids:
            record = {"id": image_id, "feature": feature_to_record(features[image_id])}
            fh.write(json.dumps(record, sort_keys=True))
            fh.write("\n")
    os.replace(tmp, path)
    return FeatureCache(path=path, fingerprint=fingerprint, features=features)
