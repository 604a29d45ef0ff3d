"""Token-level sequence representation and the frozen/active partition."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping, Sequence

MASK_TOKEN = "[MASK]"

# Surface forms (leading space stripped) that count as structural delimiters.
DEFAULT_DELIMITERS = (".", ",", ";", ":", "!", "?", "\n", ")", "]", "}")

# Newline, an optionally space-prefixed word or punctuation mark, or any other
# single whitespace char. Every character matches one branch, so joining the
# pieces reproduces the input exactly.
_PIECE_RE = re.compile(r"\n|[ ]?\w+|[ ]?[^\w\s]|\s")


class ContractViolation(ValueError):
    """A documented precondition of a scheduler primitive was broken."""


class UnknownSymbolError(ValueError):
    def __init__(self, symbol: str, position: int):
        super().__init__(f"unknown symbol {symbol!r} at position {position}")
        self.symbol = symbol
        self.position = position


def split_pieces(text: str) -> list[str]:
    return _PIECE_RE.findall(text)


def is_delimiter_surface(surface: str, delimiters: Iterable[str]) -> bool:
    delims = set(delimiters)
    if surface in delims:
        return True
    stripped = surface.lstrip(" ")
    return bool(stripped) and stripped in delims


class Tokenizer:
    """Word-level tokenizer with punctuation split into standalone tokens.

    Ids are contiguous from 0 in vocabulary order; the mask token is appended
    after the last surface token, so ``mask_id == len(vocab)``.
    """

    def __init__(self, vocab: Mapping[str, int] | Sequence[str],
                 delimiters: Iterable[str] = DEFAULT_DELIMITERS):
        if isinstance(vocab, Mapping):
            ordered = sorted(vocab.items(), key=lambda kv: kv[1])
            if [i for _, i in ordered] != list(range(len(ordered))):
                raise ValueError("vocabulary ids must be contiguous from 0")
            surfaces = [s for s, _ in ordered]
        else:
            surfaces = list(vocab)
        if len(set(surfaces)) != len(surfaces):
            raise ValueError("vocabulary surfaces must be unique")
        if MASK_TOKEN in surfaces:
            raise ValueError(f"{MASK_TOKEN} is reserved")
        self.tokens: list[str] = surfaces + [MASK_TOKEN]
        self.ids: dict[str, int] = {s: i for i, s in enumerate(self.tokens)}
        self.mask_id = len(surfaces)
        self.delimiters = tuple(delimiters)
        self.delimiter_flags = [
            i != self.mask_id and is_delimiter_surface(s, self.delimiters)
            for i, s in enumerate(self.tokens)
        ]
        self._max_len = max((len(s) for s in surfaces), default=0)

    @classmethod
    def from_corpus(cls, lines: Iterable[str],
                    delimiters: Iterable[str] = DEFAULT_DELIMITERS) -> "Tokenizer":
        """Build a vocabulary from corpus lines; the newline token is always included."""
        seen: dict[str, None] = {"\n": None}
        for line in lines:
            for piece in split_pieces(line):
                seen.setdefault(piece, None)
        return cls(list(seen), delimiters)

    @property
    def vocab_size(self) -> int:
        """Number of ids including the mask id."""
        return len(self.tokens)

    def delimiter_ids(self) -> frozenset[int]:
        return frozenset(i for i, flag in enumerate(self.delimiter_flags) if flag)

    def tokenize(self, text: str) -> list[int]:
        out: list[int] = []
        pos = 0
        for piece in split_pieces(text):
            tid = self.ids.get(piece)
            if tid is not None and tid != self.mask_id:
                out.append(tid)
            else:
                out.extend(self._greedy(piece, pos))
            pos += len(piece)
        return out

    def _greedy(self, piece: str, offset: int) -> list[int]:
        # Longest-match fallback for pieces absent from the vocabulary.
        out = []
        i = 0
        while i < len(piece):
            for j in range(min(len(piece), i + self._max_len), i, -1):
                tid = self.ids.get(piece[i:j])
                if tid is not None and tid != self.mask_id:
                    out.append(tid)
                    i = j
                    break
            else:
                raise UnknownSymbolError(piece[i], offset + i)
        return out

    def detokenize(self, ids: Iterable[int]) -> str:
        return "".join(self.tokens[i] for i in ids)


def bundled_corpus_path():
    return resources.files("lspsched") / "data" / "corpus.txt"


def load_corpus(path=None) -> list[str]:
    """Read a UTF-8 corpus, one line per row, dropping blank lines."""
    if path is None:
        text = bundled_corpus_path().read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines:
        raise ValueError(f"corpus {path or 'bundled'} is empty")
    return lines


@dataclass(frozen=True)
class SequenceState:
    """Frozen prefix (prompt plus committed tokens) and masked active suffix."""

    frozen: tuple[int, ...]
    active: tuple[int, ...]
    total_len: int
    mask_id: int

    @classmethod
    def start(cls, prompt: Sequence[int], gen_len: int, mask_id: int) -> "SequenceState":
        if gen_len < 1:
            raise ContractViolation(f"generation length must be >= 1, got {gen_len}")
        return cls(tuple(prompt), (mask_id,) * gen_len, len(prompt) + gen_len, mask_id)

    def __post_init__(self):
        if len(self.frozen) + len(self.active) != self.total_len:
            raise ContractViolation("frozen + active length must equal total_len")
        if any(t != self.mask_id for t in self.active):
            raise ContractViolation("active suffix must be fully masked")

    @property
    def n_active(self) -> int:
        return len(self.active)

    @property
    def done(self) -> bool:
        return not self.active


@dataclass(frozen=True)
class Proposal:
    """Top-1 ids and logit margins for the active rows starting at ``start``."""

    top1_ids: tuple[int, ...]
    margins: tuple[float, ...]
    start: int = 0

    def __post_init__(self):
        if len(self.top1_ids) != len(self.margins):
            raise ContractViolation("top1_ids and margins must have equal length")
        if any(m < 0 for m in self.margins):
            raise ContractViolation("margins must be non-negative")

    def __len__(self):
        return len(self.top1_ids)


def commit_prefix(state: SequenceState, tokens: Sequence[int]) -> SequenceState:
    n = len(tokens)
    if n == 0 or n > state.n_active:
        raise ContractViolation(
            f"commit of {n} tokens with {state.n_active} active positions")
    return SequenceState(state.frozen + tuple(tokens), state.active[n:],
                         state.total_len, state.mask_id)


@dataclass
class CommitMask:
    """Committed-position bitmask over the generation region.

    Used by the scattered baselines, whose committed tokens need not form a
    prefix. ``filled[i]`` is the token at generation offset ``i`` or None.
    """

    prompt: tuple[int, ...]
    filled: list[int | None] = field(default_factory=list)

    @classmethod
    def start(cls, prompt: Sequence[int], gen_len: int) -> "CommitMask":
        if gen_len < 1:
            raise ContractViolation(f"generation length must be >= 1, got {gen_len}")
        return cls(tuple(prompt), [None] * gen_len)

    @property
    def gen_len(self) -> int:
        return len(self.filled)

    @property
    def n_uncommitted(self) -> int:
        return sum(t is None for t in self.filled)

    @property
    def done(self) -> bool:
        return self.n_uncommitted == 0

    def contiguous_len(self) -> int:
        """Length of the committed run at the start of the generation region."""
        for i, t in enumerate(self.filled):
            if t is None:
                return i
        return len(self.filled)

    def frozen(self) -> tuple[int, ...]:
        k = self.contiguous_len()
        return self.prompt + tuple(self.filled[:k])  # type: ignore[arg-type]

    def islands(self) -> dict[int, int]:
        """Committed tokens right of the contiguous prefix, keyed by active-region offset."""
        k = self.contiguous_len()
        return {i - k: t for i, t in enumerate(self.filled) if i >= k and t is not None}

    def commit(self, offsets: Iterable[int], tokens: Iterable[int]) -> None:
        for i, t in zip(offsets, tokens):
            if self.filled[i] is not None:
                raise ContractViolation(f"generation offset {i} committed twice")
            self.filled[i] = t

    def tokens(self) -> list[int]:
        if not self.done:
            raise ContractViolation("sequence still has uncommitted positions")
        return list(self.prompt) + list(self.filled)  # type: ignore[arg-type]
