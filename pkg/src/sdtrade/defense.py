"""Stateful threshold detector over a buffer of historical query features.

A query is flagged when its feature lies within distance ``tau`` of any
buffered feature. Flagged queries are still inserted, so streaming
false-positive rates remain well defined; eviction is FIFO when a capacity is
set. One writer per state; distinct states may run on distinct workers.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import TagMismatch
from .features import Feature, feature_distance


@dataclass(frozen=True)
class Verdict:
    query_id: int
    flagged: bool
    min_distance: float
    matched_id: Optional[int]


@dataclass
class DetectorState:
    """Buffer of (query id, feature) pairs plus the decision threshold."""

    tau: float
    capacity: Optional[int] = None
    extractor: object = None
    buffer: list[tuple[int, Feature]] = field(default_factory=list)
    _next_id: int = 0

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        if self.capacity is not None and self.capacity < 1:
            raise ValueError(f"capacity must be positive, got {self.capacity}")


def check_and_insert(state: DetectorState, f: Feature, query_id: Optional[int] = None) -> Verdict:
    """Compare a query feature against the buffer, then insert it.

    The verdict flags the query iff the minimum distance to any buffered
    feature is <= tau (an empty buffer yields +inf and no flag). The feature
    is appended regardless of the verdict; the oldest entry is evicted when
    the capacity would be exceeded.
    """
    if query_id is None:
        query_id = state._next_id
    state._next_id = query_id + 1

    min_distance = math.inf
    matched_id = None
    for qid, stored in state.buffer:
        d = feature_distance(f, stored)  # raises TagMismatch on kind conflict
        if d < min_distance:
            min_distance = d
            matched_id = qid
    flagged = min_distance <= state.tau
    state.buffer.append((query_id, f))
    if state.capacity is not None and len(state.buffer) > state.capacity:
        del state.buffer[0]
    return Verdict(
        query_id=query_id,
        flagged=flagged,
        min_distance=min_distance,
        matched_id=matched_id if flagged else None,
    )


def reset(state: DetectorState) -> DetectorState:
    """Empty the buffer and restart query numbering; configuration is kept."""
    state.buffer.clear()
    state._next_id = 0
    return state


def verdicts_to_csv(verdicts: list[Verdict]) -> str:
    """CSV export of a verdict stream: query_id, flagged, min_distance, matched_id."""
    out = io.StringIO()
    out.write("query_id,flagged,min_distance,matched_id\n")
    for v in verdicts:
        matched = "" if v.matched_id is None else str(v.matched_id)
        out.write(f"{v.query_id},{str(v.flagged).lower()},{v.min_distance!r},{matched}\n")
    return out.getvalue()
