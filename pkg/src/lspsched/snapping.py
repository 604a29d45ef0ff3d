"""Boundary snapping: trim a candidate block back to a structural delimiter."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .seq_core import ContractViolation, Tokenizer

SNAP_MODES = ("snap", "strict", "off")


@dataclass(frozen=True)
class DelimiterSet:
    ids: frozenset[int]

    @classmethod
    def from_tokenizer(cls, tok: Tokenizer) -> "DelimiterSet":
        return cls(tok.delimiter_ids())

    @classmethod
    def of(cls, ids: Iterable[int]) -> "DelimiterSet":
        return cls(frozenset(ids))

    def __contains__(self, tid) -> bool:
        return tid in self.ids


@dataclass(frozen=True)
class SnapConfig:
    l_min: int = 1
    window: int = 16
    mode: str = "snap"

    def __post_init__(self):
        if self.l_min < 1:
            raise ContractViolation(f"l_min must be >= 1, got {self.l_min}")
        if self.window < 0:
            raise ContractViolation(f"window must be >= 0, got {self.window}")
        if self.mode not in SNAP_MODES:
            raise ContractViolation(f"mode must be one of {SNAP_MODES}, got {self.mode!r}")


def last_delimiter_in_window(prefix: Sequence[int], dset: DelimiterSet, window: int) -> int:
    """Largest 1-based j <= len(prefix) with prefix[j-1] in dset and len(prefix)-j <= window, else 0."""
    lp = len(prefix)
    for j in range(lp, max(lp - window, 1) - 1, -1):
        if prefix[j - 1] in dset:
            return j
    return 0


def snap(proposal_prefix: Sequence[int], dset: DelimiterSet, cfg: SnapConfig) -> int:
    """Final commit length for a candidate block ``proposal_prefix``.

    ``strict`` returns max(l_min, j) where j is the last delimiter position
    within ``cfg.window`` tokens of the block end, or 0 when there is none, so
    a delimiter-free block shrinks to ``l_min``. ``snap`` does the same when a
    delimiter is in the window and otherwise keeps the whole block; an empty
    block therefore comes back as 0 and the caller falls back to one token.
    ``off`` returns the block length untouched.
    """
    lp = len(proposal_prefix)
    if cfg.mode == "off":
        return lp
    j = last_delimiter_in_window(proposal_prefix, dset, cfg.window)
    if j == 0 and cfg.mode == "snap":
        return lp
    return max(cfg.l_min, j)
