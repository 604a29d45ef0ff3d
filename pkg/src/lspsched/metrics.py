"""Post-hoc analysis of decoding traces."""

from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Sequence

from .scheduler import Trace

MID_WINDOW = (0.25, 0.75)


@dataclass
class RunSummary:
    scheduler: str
    gen_len: int
    total_steps: int
    denoiser_calls: int
    total_cost: float
    gather_events: int
    cache_segments: int
    flip_rate: float | None
    tokens_per_step: dict[int, int] = field(default_factory=dict)
    exact_match: float | None = None
    perplexity: float | None = None
    seed: int | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tokens_per_step"] = {str(k): v for k, v in sorted(self.tokens_per_step.items())}
        return d


def _completion(n_active: int, gen_len: int) -> float:
    return (gen_len - n_active) / gen_len


def flip_rate_from_rows(rows: Sequence[dict], gen_len: int | None = None,
                        window: tuple[float, float] = MID_WINDOW) -> float:
    """Flip rate over plain step dicts (``n_active``, ``flips``, ``compared``).

    A step is in the window when the fraction committed before it lies in
    ``[lo, hi]``. Returns ``100 * sum(flips) / sum(compared)`` over those steps.
    """
    if not rows:
        raise ValueError("trace is empty")
    if gen_len is None:
        gen_len = rows[0]["n_active"]
    lo, hi = window
    flips = compared = 0
    for r in rows:
        if lo <= _completion(r["n_active"], gen_len) <= hi:
            flips += r["flips"]
            compared += r["compared"]
    if compared == 0:
        raise ValueError(
            f"completion window [{lo:.0%}, {hi:.0%}] holds no compared positions")
    return 100.0 * flips / compared


def flip_rate(trace: Trace, window: tuple[float, float] = MID_WINDOW) -> float:
    rows = [{"n_active": r.n_active, "flips": r.flips, "compared": r.compared}
            for r in trace.records]
    return flip_rate_from_rows(rows, trace.gen_len, window)


def decay_curve(trace: Trace) -> list[tuple[int, int]]:
    return [(r.step, r.n_active) for r in trace.records]


def speedup(run_a: RunSummary, baseline: RunSummary) -> float:
    """Denoiser-call ratio ``baseline / run_a``."""
    if run_a.denoiser_calls == 0 or baseline.denoiser_calls == 0:
        raise ValueError("speedup undefined for a run with zero denoiser calls")
    if run_a.gen_len != baseline.gen_len:
        raise ValueError(f"generation lengths differ: {run_a.gen_len} vs {baseline.gen_len}")
    return baseline.denoiser_calls / run_a.denoiser_calls


def exact_match(generated: Sequence[int], target: Sequence[int]) -> float:
    """Fraction of generated positions equal to the target."""
    if not generated:
        return 0.0
    hits = sum(g == t for g, t in zip(generated, target))
    return hits / len(generated)


def summarize(trace: Trace, *, target: Sequence[int] | None = None, ngram=None,
              seed: int | None = None) -> RunSummary:
    try:
        fr = flip_rate(trace)
    except ValueError:
        fr = None
    cache = trace.cache
    summary = RunSummary(
        scheduler=trace.kind,
        gen_len=trace.gen_len,
        total_steps=len(trace.records),
        denoiser_calls=trace.denoiser_calls,
        total_cost=cache.cost_units if cache else sum(r.cost for r in trace.records),
        gather_events=cache.gather_events if cache else sum(r.gather_event for r in trace.records),
        cache_segments=len(cache.segments) if cache else 0,
        flip_rate=fr,
        tokens_per_step=dict(Counter(r.l_snapped for r in trace.records)),
        seed=seed,
    )
    if target is not None:
        summary.exact_match = exact_match(trace.generated, target)
    if ngram is not None:
        summary.perplexity = ngram.perplexity(trace.tokens[:trace.prompt_len], trace.generated)
    return summary
