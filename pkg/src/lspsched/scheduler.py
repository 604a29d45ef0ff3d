"""Commitment schedulers: longest stable prefix plus three baselines.

``lsp`` and ``fixed_prefix`` grow a single frozen prefix. ``full`` and
``scattered_margin`` may commit anywhere in the generation region and keep a
committed-position bitmask instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .denoisers import CountingDenoiser, Denoiser
from .kv_cost import CacheModel, attention_cost
from .seq_core import CommitMask, ContractViolation, Proposal, SequenceState, commit_prefix
from .snapping import DelimiterSet, SnapConfig, snap
from .stability import MarginArray, SizingBounds, select_block_length, top_two

KINDS = ("lsp", "full", "fixed_prefix", "scattered_margin")
PREFIX_KINDS = ("lsp", "fixed_prefix")


@dataclass(frozen=True)
class SchedulerConfig:
    kind: str = "lsp"
    bounds: SizingBounds = field(default_factory=SizingBounds)
    snap: SnapConfig = field(default_factory=SnapConfig)
    gen_len: int = 128
    seed: int = 0
    k: int = 1
    delimiters: DelimiterSet = field(default_factory=lambda: DelimiterSet(frozenset()))
    gather_penalty: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ContractViolation(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.gen_len < 1:
            raise ContractViolation(f"gen_len must be >= 1, got {self.gen_len}")
        if self.k < 1:
            raise ContractViolation(f"k must be >= 1, got {self.k}")

    @property
    def label(self) -> str:
        return f"fixed_prefix({self.k})" if self.kind == "fixed_prefix" else self.kind


@dataclass
class StepRecord:
    step: int
    n_active: int
    l_prime: int
    l_snapped: int
    committed_ids: list[int]
    committed_positions: list[int]
    flips: int
    compared: int
    cost: float
    gather_event: bool
    fallback: bool = False
    margins: list[float] = field(default_factory=list, repr=False)
    proposal: Proposal | None = field(default=None, repr=False)

    JSON_FIELDS = ("step", "n_active", "l_prime", "l_snapped", "committed_ids",
                   "committed_positions", "flips", "compared", "cost", "gather_event",
                   "fallback", "margins")

    def to_json_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.JSON_FIELDS}


@dataclass
class Trace:
    kind: str
    gen_len: int
    prompt_len: int
    records: list[StepRecord] = field(default_factory=list)
    tokens: list[int] = field(default_factory=list)
    denoiser_calls: int = 0
    cache: CacheModel | None = None

    def __len__(self):
        return len(self.records)

    @property
    def generated(self) -> list[int]:
        return self.tokens[self.prompt_len:]


def count_flips(proposal: Proposal, prev: Proposal | None, positions) -> tuple[int, int]:
    """Top-1 changes at absolute ``positions`` between two proposals.

    Returns ``(flips, compared)``; positions the previous proposal did not
    cover are skipped.
    """
    if prev is None:
        return 0, 0
    flips = compared = 0
    for pos in positions:
        j = pos - prev.start
        if 0 <= j < len(prev):
            compared += 1
            flips += proposal.top1_ids[pos - proposal.start] != prev.top1_ids[j]
    return flips, compared


def _propose(denoiser: Denoiser, frozen, active_len: int, step: int, seed: int, islands=None):
    logits = denoiser.predict(frozen, active_len, step, seed, islands)
    if logits.shape[0] != active_len:
        raise ContractViolation(
            f"denoiser returned {logits.shape[0]} rows for {active_len} active positions")
    top1, z1, z2 = top_two(logits)
    delta = z1 - z2
    prop = Proposal(tuple(int(t) for t in top1), tuple(float(d) for d in delta), start=len(frozen))
    return prop, delta


def _prefix_step(state: SequenceState, denoiser: Denoiser, cfg: SchedulerConfig,
                 prev: Proposal | None, step: int, cache: CacheModel | None):
    n = state.n_active
    if n < 1:
        raise ContractViolation("no active positions left")
    prop, delta = _propose(denoiser, state.frozen, n, step, cfg.seed)
    fallback = False
    if cfg.kind == "lsp":
        l_prime = select_block_length(MarginArray.from_values(delta), n, cfg.bounds)
        length = max(1, snap(prop.top1_ids[:l_prime], cfg.delimiters, cfg.snap))
        fallback = l_prime == 0
        # strict snapping can ask for l_min tokens when fewer remain
        length = min(length, n)
    else:
        l_prime = length = min(cfg.k, n)
    if not 1 <= length <= n:
        raise ContractViolation(f"commit length {length} outside [1, {n}]")

    committed = list(prop.top1_ids[:length])
    start = len(state.frozen)
    positions = list(range(start, start + length))
    flips, compared = count_flips(prop, prev, range(start, start + n))
    cost = attention_cost(start, n)
    gather = False
    if cache is not None:
        cache.charge(cost)
        gather = cache.append(positions)
    new_state = commit_prefix(state, committed)
    rec = StepRecord(step, n, l_prime, length, committed, positions, flips, compared,
                     cost, gather, fallback, delta.tolist(), prop)
    return new_state, rec


def lsp_step(state: SequenceState, denoiser: Denoiser, cfg: SchedulerConfig,
             prev_proposal: Proposal | None = None, *, step: int = 1,
             cache: CacheModel | None = None) -> tuple[SequenceState, StepRecord]:
    """One iteration of the longest-stable-prefix loop.

    A single denoiser call yields top-1 ids and margins; the block length is
    picked from the prefix minima, snapped to a delimiter, raised to 1 if it
    came out empty, and committed as one contiguous append.
    """
    if cfg.kind != "lsp":
        cfg = _with_kind(cfg, "lsp")
    return _prefix_step(state, denoiser, cfg, prev_proposal, step, cache)


def fixed_prefix_step(state: SequenceState, denoiser: Denoiser, cfg: SchedulerConfig,
                      prev_proposal: Proposal | None = None, *, step: int = 1,
                      cache: CacheModel | None = None) -> tuple[SequenceState, StepRecord]:
    """Commit the leftmost ``cfg.k`` top-1 tokens regardless of margin."""
    if cfg.kind != "fixed_prefix":
        cfg = _with_kind(cfg, "fixed_prefix")
    return _prefix_step(state, denoiser, cfg, prev_proposal, step, cache)


def _with_kind(cfg: SchedulerConfig, kind: str) -> SchedulerConfig:
    return SchedulerConfig(kind, cfg.bounds, cfg.snap, cfg.gen_len, cfg.seed, cfg.k,
                           cfg.delimiters, cfg.gather_penalty)


def _scattered_step(mask: CommitMask, denoiser: Denoiser, cfg: SchedulerConfig,
                    prev: Proposal | None, step: int, cache: CacheModel | None,
                    single: bool) -> StepRecord:
    base = mask.contiguous_len()
    frozen = mask.frozen()
    islands = mask.islands()
    region = mask.gen_len - base
    prop, delta = _propose(denoiser, frozen, region, step, cfg.seed, islands)
    open_rows = np.array([i for i in range(region) if i not in islands], dtype=np.int64)
    n = len(open_rows)
    if n < 1:
        raise ContractViolation("no uncommitted positions left")
    open_margins = delta[open_rows]

    if single:
        m = 1
    else:
        lo, hi = cfg.bounds.window(n)
        confident = int(np.count_nonzero(open_margins > cfg.bounds.tau_floor))
        m = max(1, min(max(confident, lo), hi))
    # Stable sort on negated margins: highest first, leftmost among ties.
    order = np.argsort(-open_margins, kind="stable")[:m]
    rows = sorted(int(open_rows[j]) for j in order)

    committed = [prop.top1_ids[r] for r in rows]
    offsets = [base + r for r in rows]
    positions = [len(mask.prompt) + o for o in offsets]
    uncommitted_abs = [len(frozen) + int(r) for r in open_rows]
    flips, compared = count_flips(prop, prev, uncommitted_abs)
    cost = attention_cost(len(frozen), region)
    gather = False
    if cache is not None:
        cache.charge(cost)
        gather = cache.append(positions)
    mask.commit(offsets, committed)
    return StepRecord(step, n, m, m, committed, positions, flips, compared, cost, gather,
                      False, delta.tolist(), prop)


def full_step(mask: CommitMask, denoiser: Denoiser, cfg: SchedulerConfig,
              prev_proposal: Proposal | None = None, *, step: int = 1,
              cache: CacheModel | None = None) -> tuple[CommitMask, StepRecord]:
    """Commit the single most confident uncommitted position (leftmost on ties)."""
    rec = _scattered_step(mask, denoiser, cfg, prev_proposal, step, cache, single=True)
    return mask, rec


def scattered_margin_step(mask: CommitMask, denoiser: Denoiser, cfg: SchedulerConfig,
                          prev_proposal: Proposal | None = None, *, step: int = 1,
                          cache: CacheModel | None = None) -> tuple[CommitMask, StepRecord]:
    """Commit the top-m positions by margin wherever they sit.

    ``m`` is the number of uncommitted margins above ``tau_floor``, clamped to
    the fractional window and to at least one.
    """
    rec = _scattered_step(mask, denoiser, cfg, prev_proposal, step, cache, single=False)
    return mask, rec


_STEPS = {
    "lsp": lsp_step,
    "fixed_prefix": fixed_prefix_step,
    "full": full_step,
    "scattered_margin": scattered_margin_step,
}


def run(state0: SequenceState, denoiser: Denoiser,
        cfg: SchedulerConfig) -> tuple[list[int], Trace]:
    """Decode until every generation position is committed."""
    if state0.n_active != cfg.gen_len:
        raise ContractViolation(
            f"state has {state0.n_active} active positions but gen_len={cfg.gen_len}")
    counter = CountingDenoiser(denoiser)
    cache = CacheModel.init(len(state0.frozen), cfg.gather_penalty)
    trace = Trace(cfg.label, cfg.gen_len, len(state0.frozen), cache=cache)
    step_fn = _STEPS[cfg.kind]
    state = state0 if cfg.kind in PREFIX_KINDS else CommitMask.start(state0.frozen, cfg.gen_len)
    prev = None
    step = 0
    while not state.done:
        step += 1
        if step > cfg.gen_len:
            raise ContractViolation(f"{cfg.label} made no progress within {cfg.gen_len} steps")
        state, rec = step_fn(state, counter, cfg, prev, step=step, cache=cache)
        trace.records.append(rec)
        prev = rec.proposal
    trace.tokens = list(state.frozen) if cfg.kind in PREFIX_KINDS else state.tokens()
    trace.denoiser_calls = counter.calls
    return trace.tokens, trace
