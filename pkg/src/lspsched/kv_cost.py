"""KV-cache layout and attention cost accounting.

Positions are absolute sequence indices (prompt included). Segments are
inclusive ``(start, end)`` ranges kept sorted and disjoint, with adjacent
ranges merged.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Iterable

from .seq_core import ContractViolation


@dataclass
class CacheModel:
    segments: list[tuple[int, int]] = field(default_factory=list)
    append_count: int = 0
    gather_events: int = 0
    cost_units: float = 0.0
    gather_penalty: float = 0.0

    @classmethod
    def init(cls, prefix_len: int, gather_penalty: float = 0.0) -> "CacheModel":
        """Cache seeded with the prompt occupying positions ``[0, prefix_len)``."""
        segs = [(0, prefix_len - 1)] if prefix_len > 0 else []
        return cls(segments=segs, gather_penalty=gather_penalty)

    @property
    def n_committed(self) -> int:
        return sum(e - s + 1 for s, e in self.segments)

    def contains(self, pos: int) -> bool:
        i = bisect.bisect_right(self.segments, (pos, float("inf"))) - 1
        return i >= 0 and self.segments[i][0] <= pos <= self.segments[i][1]

    def append(self, positions: Iterable[int]) -> bool:
        """Commit ``positions``; returns True when the update counts as a gather event."""
        pos = sorted(set(positions))
        if not pos:
            return False
        for p in pos:
            if self.contains(p):
                raise ContractViolation(f"position {p} already cached")
        contiguous = pos[-1] - pos[0] + 1 == len(pos)
        # An empty cache is extended contiguously only from position 0.
        right_end = self.segments[-1][1] if self.segments else -1
        adjacent = pos[0] == right_end + 1
        gather = not (contiguous and adjacent)
        for p in pos:
            self._insert(p)
        self.append_count += 1
        if gather:
            self.gather_events += 1
            self.cost_units += self.gather_penalty
        return gather

    def _insert(self, p: int) -> None:
        segs = self.segments
        i = bisect.bisect_left(segs, (p, p))
        joins_left = i > 0 and segs[i - 1][1] == p - 1
        joins_right = i < len(segs) and segs[i][0] == p + 1
        if joins_left and joins_right:
            segs[i - 1] = (segs[i - 1][0], segs[i][1])
            del segs[i]
        elif joins_left:
            segs[i - 1] = (segs[i - 1][0], p)
        elif joins_right:
            segs[i] = (p, segs[i][1])
        else:
            segs.insert(i, (p, p))

    def charge(self, units: float) -> None:
        self.cost_units += units


def cache_append(cache: CacheModel, positions: Iterable[int]) -> CacheModel:
    """Append in place and return the same cache, for call-chaining."""
    cache.append(positions)
    return cache


def attention_cost(frozen_len: int, active_len: int) -> int:
    """Token-pair interactions for active-suffix queries over the full sequence."""
    if frozen_len < 0 or active_len < 0:
        raise ContractViolation("lengths must be >= 0")
    return active_len * (frozen_len + active_len)
