"""Denoiser interface and two synthetic denoisers.

A denoiser maps the committed context to a logit matrix with one row per
active position. The active region starts right after ``frozen``; the
scattered baselines also pass ``islands``, the committed tokens inside the
active region keyed by row offset. Rows for island positions are returned
but ignored by the schedulers.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from .seq_core import Tokenizer

# Logit assigned to the mask id so it is never a top-two candidate.
MASK_LOGIT = -1e9


class Denoiser(Protocol):
    vocab_size: int

    def predict(self, frozen: Sequence[int], active_len: int, step: int, seed: int,
                islands: Mapping[int, int] | None = None) -> np.ndarray: ...


class CountingDenoiser:
    """Wraps a denoiser and counts ``predict`` calls."""

    def __init__(self, inner: Denoiser):
        self.inner = inner
        self.calls = 0

    @property
    def vocab_size(self) -> int:
        return self.inner.vocab_size

    def predict(self, frozen, active_len, step, seed, islands=None):
        self.calls += 1
        return self.inner.predict(frozen, active_len, step, seed, islands)


# -- keyed noise ------------------------------------------------------------

def _splitmix(x: np.ndarray) -> np.ndarray:
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def keyed_uniform(seed: int, positions: np.ndarray, step: int, stream: int) -> np.ndarray:
    """Uniforms in (0, 1), a pure function of (seed, position, step, stream)."""
    with np.errstate(over="ignore"):
        h = _splitmix(np.full(positions.shape, seed & 0xFFFFFFFFFFFFFFFF, dtype=np.uint64))
        h = _splitmix(h ^ positions.astype(np.uint64))
        h = _splitmix(h ^ np.uint64(step & 0xFFFFFFFFFFFFFFFF))
        h = _splitmix(h ^ np.uint64(stream))
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def keyed_normal(seed: int, positions: np.ndarray, step: int, stream: int) -> np.ndarray:
    u1 = keyed_uniform(seed, positions, step, 2 * stream + 101)
    u2 = keyed_uniform(seed, positions, step, 2 * stream + 102)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


# -- oracle -----------------------------------------------------------------

FLIP_LAWS = ("logistic", "constant")


@dataclass(frozen=True)
class OracleDenoiser:
    """Synthetic denoiser that knows the ground-truth continuation.

    The margin at active row ``i`` is ``mu * gamma**i`` (distance measured from
    the contiguous frozen boundary), minus ``phi`` when the row borders a
    committed island, plus ``sigma`` times keyed Gaussian noise, clipped at 0.
    The row's top-1 is replaced by a keyed distractor with probability
    ``flip_prob`` (``flip_law="constant"``) or ``flip_prob * 2 / (1 + exp(margin))``
    (``"logistic"``). All draws are keyed on (seed, absolute position, step).
    """

    target: tuple[int, ...]
    vocab_size: int
    mask_id: int
    prompt_len: int = 0
    mu: float = 6.0
    gamma: float = 0.97
    sigma: float = 1.0
    phi: float = 2.0
    flip_prob: float = 0.5
    flip_law: str = "logistic"

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.sigma < 0 or self.phi < 0 or self.mu < 0:
            raise ValueError("mu, sigma and phi must be >= 0")
        if not 0 <= self.flip_prob <= 1:
            raise ValueError(f"flip_prob must be in [0, 1], got {self.flip_prob}")
        if self.flip_law not in FLIP_LAWS:
            raise ValueError(f"flip_law must be one of {FLIP_LAWS}")
        if self.vocab_size < 3:
            raise ValueError("oracle needs a vocabulary of at least 3 ids")

    def predict(self, frozen, active_len, step, seed, islands=None):
        islands = islands or {}
        offset = len(frozen) - self.prompt_len
        if offset < 0 or offset + active_len > len(self.target):
            raise ValueError(
                f"target exhausted: rows {offset}..{offset + active_len} "
                f"requested from a target of length {len(self.target)}")
        rows = np.arange(active_len)
        abs_pos = rows + len(frozen)
        target = np.asarray(self.target[offset:offset + active_len], dtype=np.int64)

        delta = self.mu * self.gamma ** rows.astype(np.float64)
        if islands and self.phi > 0:
            isl = np.zeros(active_len + 2, dtype=bool)
            isl[np.fromiter(islands, dtype=np.int64) + 1] = True
            adjacent = (isl[:-2] | isl[2:]) & ~isl[1:-1]
            delta = delta - self.phi * adjacent
        if self.sigma > 0:
            delta = delta + self.sigma * keyed_normal(seed, abs_pos, step, 0)
        delta = np.maximum(delta, 0.0)

        if self.flip_prob > 0:
            p = np.full(active_len, self.flip_prob)
            if self.flip_law == "logistic":
                p = p * 2.0 / (1.0 + np.exp(delta))
            flipped = keyed_uniform(seed, abs_pos, step, 1) < p
        else:
            flipped = np.zeros(active_len, dtype=bool)
        distractor = self._distractors(target, keyed_uniform(seed, abs_pos, step, 2))

        top = np.where(flipped, distractor, target)
        second = np.where(flipped, target, distractor)
        for off, tid in islands.items():
            # Committed rows echo their token; schedulers never read them.
            top[off] = tid
            second[off] = target[off] if distractor[off] == tid else distractor[off]
            delta[off] = self.mu

        logits = np.full((active_len, self.vocab_size), -1.0)
        logits[rows, second] = 0.0
        logits[rows, top] = delta
        logits[:, self.mask_id] = MASK_LOGIT
        return logits

    def _distractors(self, target: np.ndarray, u: np.ndarray) -> np.ndarray:
        # Uniform over ids other than the target and the mask.
        d = np.floor(u * (self.vocab_size - 2)).astype(np.int64)
        lo = np.minimum(target, self.mask_id)
        hi = np.maximum(target, self.mask_id)
        d = d + (d >= lo)
        d = d + (d >= hi)
        return d


# -- n-gram -----------------------------------------------------------------

@dataclass
class _Table:
    order: int
    counts: dict = field(default_factory=lambda: defaultdict(Counter))
    totals: Counter = field(default_factory=Counter)

    def add(self, stream: Sequence[int], pad: int) -> None:
        padded = [pad] * (self.order - 1) + list(stream)
        for i in range(self.order - 1, len(padded)):
            ctx = tuple(padded[i - self.order + 1:i])
            self.counts[ctx][padded[i]] += 1
            self.totals[ctx] += 1


class NGramDenoiser:
    """Bidirectional add-k n-gram model over token ids.

    The forward table conditions on the ``order - 1`` tokens to the left, the
    backward table on the ``order - 1`` tokens to the right. A row's
    distribution is ``lam * P_fwd + (1 - lam) * P_bwd``.
    """

    def __init__(self, order: int, k: float, lam: float, vocab_size: int, mask_id: int,
                 pad_id: int, fwd: _Table, bwd: _Table):
        self.order = order
        self.k = k
        self.lam = lam
        self.vocab_size = vocab_size
        self.mask_id = mask_id
        self.pad_id = pad_id
        self.fwd = fwd
        self.bwd = bwd
        # Ids the model distributes mass over.
        self.n_symbols = vocab_size - 1 if 0 <= mask_id < vocab_size else vocab_size
        self._symbol_ids = np.array([i for i in range(vocab_size) if i != mask_id])

    @classmethod
    def from_sequences(cls, sequences: Iterable[Sequence[int]], vocab_size: int,
                       mask_id: int = -1, order: int = 3, k: float = 0.5,
                       lam: float = 0.5, pad_id: int | None = None) -> "NGramDenoiser":
        if order < 1:
            raise ValueError(f"order must be >= 1, got {order}")
        if k <= 0:
            raise ValueError(f"k must be > 0, got {k}")
        if not 0 <= lam <= 1:
            raise ValueError(f"lam must be in [0, 1], got {lam}")
        seqs = [list(s) for s in sequences]
        if not any(seqs):
            raise ValueError("empty corpus")
        # -1 is outside every vocabulary, so padding never collides with a real context.
        pad = -1 if pad_id is None else pad_id
        fwd, bwd = _Table(order), _Table(order)
        for s in seqs:
            fwd.add(s, pad)
            bwd.add(s[::-1], pad)
        return cls(order, k, lam, vocab_size, mask_id, pad, fwd, bwd)

    def _dist(self, table: _Table, ctx: tuple[int, ...]) -> np.ndarray:
        p = np.full(self.vocab_size, self.k)
        total = table.totals.get(ctx, 0)
        if total:
            for tid, c in table.counts[ctx].items():
                p[tid] += c
        if 0 <= self.mask_id < self.vocab_size:
            p[self.mask_id] = 0.0
        return p / (total + self.k * self.n_symbols)

    def prob(self, ctx: Sequence[int], direction: str = "fwd") -> np.ndarray:
        """Smoothed next-token distribution for a context of length ``order - 1``."""
        table = self.fwd if direction == "fwd" else self.bwd
        return self._dist(table, tuple(ctx))

    def _left_ctx(self, seq: list[int], i: int) -> tuple[int, ...]:
        n = self.order - 1
        if n == 0:
            return ()
        left = seq[max(0, i - n):i]
        return tuple([self.pad_id] * (n - len(left)) + left)

    def predict(self, frozen, active_len, step, seed, islands=None):
        # step and seed are accepted for interface parity; the model is deterministic.
        islands = islands or {}
        n_ctx = self.order - 1
        seq = list(frozen)
        base = len(seq)
        p_fwd = np.empty((active_len, self.vocab_size))
        for i in range(active_len):
            p_fwd[i] = self._dist(self.fwd, self._left_ctx(seq, base + i))
            seq.append(islands.get(i, int(np.argmax(p_fwd[i]))))
        uniform = np.zeros(self.vocab_size)
        uniform[self._symbol_ids] = 1.0 / self.n_symbols
        p = np.empty_like(p_fwd)
        for i in range(active_len):
            right = seq[base + i + 1:base + i + 1 + n_ctx]
            if len(right) < n_ctx:
                p_bwd = uniform
            else:
                p_bwd = self._dist(self.bwd, tuple(reversed(right)))
            p[i] = self.lam * p_fwd[i] + (1.0 - self.lam) * p_bwd
        with np.errstate(divide="ignore"):
            logits = np.log(p)
        if 0 <= self.mask_id < self.vocab_size:
            logits[:, self.mask_id] = MASK_LOGIT
        return logits

    def perplexity(self, context: Sequence[int], tokens: Sequence[int]) -> float:
        """Forward-model perplexity of ``tokens`` following ``context``."""
        seq = list(context)
        total = 0.0
        for t in tokens:
            total += math.log(self._dist(self.fwd, self._left_ctx(seq, len(seq)))[t])
            seq.append(t)
        return math.exp(-total / max(len(tokens), 1))


def ngram_fit(corpus: Iterable[str], tokenizer: Tokenizer | None = None, order: int = 3,
              k: float = 0.5, lam: float = 0.5) -> NGramDenoiser:
    """Fit on text lines; each line is framed by newline tokens."""
    lines = list(corpus)
    if not any(ln.strip() for ln in lines):
        raise ValueError("empty corpus")
    tok = tokenizer or Tokenizer.from_corpus(lines)
    nl = tok.ids.get("\n")
    tail = [] if nl is None else [nl]
    seqs = [tok.tokenize(ln) + tail for ln in lines if ln.strip()]
    return NGramDenoiser.from_sequences(seqs, tok.vocab_size, tok.mask_id, order, k, lam,
                                        pad_id=nl)
