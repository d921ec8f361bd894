"""Feature values produced by the extractors, their distances, and JSON encoding.

A feature is one of four kinds, each with an intrinsic distance:

* :class:`DigestSet`  - set of SHA-256 digests; distance counts non-common digests.
* :class:`BitString`  - packed bit vector; distance is the hamming bit count.
* :class:`IntVector`  - integer lattice point; exact-match distance (0 or +inf).
* :class:`RealVector` - real vector; Euclidean distance.

Distances are only defined between features of the same kind and the same
dimensionality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DimensionMismatch, TagMismatch

DIGEST_BYTES = 32


@dataclass(frozen=True)
class DigestSet:
    """Set of 256-bit digests kept by a sliding-window hash, capped at ``top_k``."""

    digests: frozenset[bytes]
    top_k: int

    def __post_init__(self):
        if self.top_k < 1:
            raise ValueError(f"top_k must be positive, got {self.top_k}")
        if len(self.digests) > self.top_k:
            raise ValueError(f"{len(self.digests)} digests exceed top_k={self.top_k}")
        for d in self.digests:
            if len(d) != DIGEST_BYTES:
                raise ValueError(f"digest length {len(d)} != {DIGEST_BYTES} bytes")


@dataclass(frozen=True)
class BitString:
    """Packed bit vector; bit 0 of the feature is the MSB of ``packed[0]``."""

    packed: bytes
    n_bits: int

    def __post_init__(self):
        if self.n_bits < 0 or len(self.packed) != (self.n_bits + 7) // 8:
            raise ValueError(
                f"{len(self.packed)} bytes cannot hold exactly {self.n_bits} bits"
            )

    def as_int(self) -> int:
        return int.from_bytes(self.packed, "big")


@dataclass(eq=False)
class IntVector:
    """Integer lattice point, e.g. the output of the rounding quantizer."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int64)

    def __eq__(self, other):
        return isinstance(other, IntVector) and np.array_equal(self.values, other.values)


@dataclass(eq=False)
class RealVector:
    """Real-valued feature vector, e.g. the output of a linear extractor."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)

    def __eq__(self, other):
        return isinstance(other, RealVector) and np.array_equal(self.values, other.values)


Feature = Union[DigestSet, BitString, IntVector, RealVector]


def feature_distance(a: Feature, b: Feature) -> float:
    """Distance between two features of the same kind.

    DigestSet distance is the count of non-common digests,
    ``max(|a|, |b|) - |a & b|``; for full-size sets this equals
    ``top_k - |a & b|`` and it is zero exactly on identical sets.
    BitString distance is the hamming bit count, IntVector distance is 0 for
    equal vectors and +inf otherwise (exact-match detection), and RealVector
    distance is the Euclidean norm of the difference.

    Raises TagMismatch for different kinds and DimensionMismatch for
    incompatible sizes.
    """
    if type(a) is not type(b):
        raise TagMismatch(f"cannot compare {type(a).__name__} with {type(b).__name__}")
    if isinstance(a, DigestSet):
        if a.top_k != b.top_k:
            raise DimensionMismatch(f"top_k differs: {a.top_k} vs {b.top_k}")
        return float(max(len(a.digests), len(b.digests)) - len(a.digests & b.digests))
    if isinstance(a, BitString):
        if a.n_bits != b.n_bits:
            raise DimensionMismatch(f"bit lengths differ: {a.n_bits} vs {b.n_bits}")
        return float((a.as_int() ^ b.as_int()).bit_count())
    if isinstance(a, IntVector):
        if a.values.shape != b.values.shape:
            raise DimensionMismatch(
                f"vector lengths differ: {a.values.shape} vs {b.values.shape}"
            )
        return 0.0 if np.array_equal(a.values, b.values) else math.inf
    if isinstance(a, RealVector):
        if a.values.shape != b.values.shape:
            raise DimensionMismatch(
                f"vector lengths differ: {a.values.shape} vs {b.values.shape}"
            )
        return float(np.linalg.norm(a.values - b.values))
    raise TagMismatch(f"unsupported feature type {type(a).__name__}")


def feature_to_record(f: Feature) -> dict:
    """Encode a feature as a JSON-serializable dict (cache wire format).

    Digest sets are stored as sorted hex strings, bit strings as hex, and
    vectors as decimal arrays.
    """
    if isinstance(f, DigestSet):
        return {
            "kind": "digest_set",
            "top_k": f.top_k,
            "digests": sorted(d.hex() for d in f.digests),
        }
    if isinstance(f, BitString):
        return {"kind": "bit_string", "n_bits": f.n_bits, "hex": f.packed.hex()}
    if isinstance(f, IntVector):
        return {"kind": "int_vector", "values": [int(v) for v in f.values]}
    if isinstance(f, RealVector):
        return {"kind": "real_vector", "values": [float(v) for v in f.values]}
    raise TagMismatch(f"unsupported feature type {type(f).__name__}")


def feature_from_record(record: dict) -> Feature:
    """Inverse of :func:`feature_to_record`."""
    kind = record.get("kind")
    if kind == "digest_set":
        return DigestSet(
            digests=frozenset(bytes.fromhex(h) for h in record["digests"]),
            top_k=int(record["top_k"]),
        )
    if kind == "bit_string":
        return BitString(packed=bytes.fromhex(record["hex"]), n_bits=int(record["n_bits"]))
    if kind == "int_vector":
        return IntVector(np.array(record["values"], dtype=np.int64))
    if kind == "real_vector":
        return RealVector(np.array(record["values"], dtype=np.float64))
    raise ValueError(f"unknown feature kind {kind!r}")
