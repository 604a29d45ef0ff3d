import math

import pytest

from lspsched.metrics import (RunSummary, decay_curve, exact_match, flip_rate,
                              flip_rate_from_rows, speedup, summarize)
from lspsched.scheduler import SchedulerConfig, run
from lspsched.snapping import SnapConfig


def rows_for(gen_len, flips, compared):
    """One row per step with n_active shrinking by 4 each step."""
    return [{"n_active": gen_len - 4 * i, "flips": f, "compared": c}
            for i, (f, c) in enumerate(zip(flips, compared))]


def summary(calls, gen_len=16):
    return RunSummary("x", gen_len, calls, calls, 0.0, 0, 1, None)


class TestFlipRate:
    def test_no_flips(self):
        rows = rows_for(16, [0, 0, 0, 0], [0, 12, 8, 4])
        assert flip_rate_from_rows(rows) == 0.0

    def test_two_of_twenty(self):
        # Completion of steps 2 and 3 is 25% and 50%; step 4 is 75%.
        rows = rows_for(16, [5, 1, 1, 0], [0, 12, 4, 4])
        assert flip_rate_from_rows(rows) == pytest.approx(100 * 2 / 20)

    def test_outside_window_ignored(self):
        rows = rows_for(16, [9, 0, 0, 0], [9, 4, 4, 4])
        assert flip_rate_from_rows(rows) == 0.0

    def test_empty_window(self):
        with pytest.raises(ValueError, match="window"):
            flip_rate_from_rows([{"n_active": 16, "flips": 0, "compared": 0}])

    def test_empty_trace(self):
        with pytest.raises(ValueError, match="empty"):
            flip_rate_from_rows([])

    def test_trace_wrapper(self, make_oracle, start):
        _, tr = run(start(64), make_oracle(64), SchedulerConfig("scattered_margin", gen_len=64))
        rows = [{"n_active": r.n_active, "flips": r.flips, "compared": r.compared}
                for r in tr.records]
        assert flip_rate(tr) == flip_rate_from_rows(rows, 64)


class TestSpeedup:
    def test_full_vs_fixed_prefix(self, noiseless, start):
        runs = {}
        for name, cfg in {"full": SchedulerConfig("full", gen_len=64),
                          "fp2": SchedulerConfig("fixed_prefix", k=2, gen_len=64)}.items():
            _, tr = run(start(64), noiseless(64), cfg)
            runs[name] = summarize(tr)
        assert speedup(runs["fp2"], runs["full"]) == 2.0
        assert speedup(runs["full"], runs["full"]) == 1.0

    @pytest.mark.parametrize("k", [1, 2, 4, 8])
    def test_fixed_prefix_speedup_is_k(self, k):
        assert speedup(summary(math.ceil(128 / k), 128), summary(128, 128)) == k

    def test_lsp_noiseless_at_least_two(self, noiseless, start):
        _, lsp = run(start(128), noiseless(128), SchedulerConfig("lsp", gen_len=128))
        _, full = run(start(128), noiseless(128), SchedulerConfig("full", gen_len=128))
        assert speedup(summarize(lsp), summarize(full)) >= 2.0

    def test_zero_calls(self):
        with pytest.raises(ValueError):
            speedup(summary(0), summary(16))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            speedup(summary(4, 16), summary(8, 32))


class TestDecayCurve:
    def test_fixed_prefix(self, noiseless, start):
        _, tr = run(start(16), noiseless(16), SchedulerConfig("fixed_prefix", k=4, gen_len=16))
        assert decay_curve(tr) == [(1, 16), (2, 12), (3, 8), (4, 4)]

    def test_lsp_halves(self, noiseless, start):
        cfg = SchedulerConfig("lsp", snap=SnapConfig(mode="off"), gen_len=16)
        _, tr = run(start(16), noiseless(16), cfg)
        curve = decay_curve(tr)
        assert curve == [(1, 16), (2, 8), (3, 4), (4, 2), (5, 1)]
        assert curve[-1][1] >= 1


class TestSummary:
    def test_exact_match(self):
        assert exact_match([1, 2, 3, 4], [1, 2, 0, 4]) == 0.75
        assert exact_match([], [1]) == 0.0

    def test_noiseless_summary(self, noiseless, start, stream):
        _, tr = run(start(32), noiseless(32), SchedulerConfig("lsp", gen_len=32))
        s = summarize(tr, target=stream[:32], seed=3)
        assert s.exact_match == 1.0
        assert s.total_steps == s.denoiser_calls == len(tr)
        assert sum(n * c for n, c in s.tokens_per_step.items()) == 32
        assert s.gather_events == 0 and s.cache_segments == 1
        d = s.to_dict()
        assert d["seed"] == 3 and all(isinstance(k, str) for k in d["tokens_per_step"])
