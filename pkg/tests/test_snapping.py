import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lspsched.seq_core import ContractViolation
from lspsched.snapping import DelimiterSet, SnapConfig, snap


def brute_last_delim(ys, dset, w):
    lp = len(ys)
    js = [j for j in range(1, lp + 1) if ys[j - 1] in dset and lp - j <= w]
    return max(js, default=0)


WORDS = ["so", "x", "=", "7", ".", "then", "we"]
IDS = {w: i for i, w in enumerate(WORDS)}
PERIOD = DelimiterSet.of([IDS["."]])


class TestSnapExamples:
    def test_snaps_to_period(self):
        ys = [IDS[w] for w in WORDS]
        assert snap(ys, PERIOD, SnapConfig(1, 16, "snap")) == 5

    def test_empty_block(self):
        assert snap([], PERIOD, SnapConfig(1, 16, "snap")) == 0

    def test_no_delimiter_modes(self):
        ys = [IDS["x"]] * 6
        assert snap(ys, PERIOD, SnapConfig(1, 16, "snap")) == 6
        assert snap(ys, PERIOD, SnapConfig(1, 16, "strict")) == 1
        assert snap(ys, PERIOD, SnapConfig(1, 16, "off")) == 6
        # brute-force oracle agrees for the strict formula
        assert max(1, brute_last_delim(ys, PERIOD, 16)) == 1

    def test_delimiter_outside_window(self):
        ys = [IDS["."]] + [IDS["x"]] * 5
        assert snap(ys, PERIOD, SnapConfig(1, 3, "snap")) == 6
        assert snap(ys, PERIOD, SnapConfig(1, 5, "snap")) == 1

    def test_l_min_raises_short_snap(self):
        ys = [IDS["."], IDS["x"], IDS["x"], IDS["x"]]
        assert snap(ys, PERIOD, SnapConfig(3, 16, "snap")) == 3

    def test_off_ignores_delimiters(self):
        ys = [IDS[w] for w in WORDS]
        assert snap(ys, PERIOD, SnapConfig(1, 16, "off")) == 7

    @pytest.mark.parametrize("kw", [dict(l_min=0), dict(window=-1), dict(mode="x")])
    def test_config_validated(self, kw):
        with pytest.raises(ContractViolation):
            SnapConfig(**kw)


token_lists = st.lists(st.integers(0, 5), max_size=40)


class TestSnapProperties:
    @given(token_lists, st.integers(1, 4), st.integers(0, 20))
    def test_case_analysis(self, ys, l_min, w):
        dset = DelimiterSet.of([0, 1])
        lp = len(ys)
        for mode in ("snap", "off"):
            got = snap(ys, dset, SnapConfig(l_min, w, mode))
            if lp >= l_min:
                assert got <= lp
            if lp > 0:
                assert got >= min(l_min, lp)
            assert got == 0 or got in (lp, l_min) or ys[got - 1] in dset

    @given(token_lists, st.integers(1, 4))
    def test_zero_window_trims_only_at_last_token(self, ys, l_min):
        dset = DelimiterSet.of([0])
        got = snap(ys, dset, SnapConfig(l_min, 0, "snap"))
        if ys and ys[-1] == 0:
            assert got == max(l_min, len(ys))
        else:
            assert got == len(ys)

    def test_strict_matches_literal_formula(self):
        rng = random.Random(5)
        for _ in range(1000):
            ys = [rng.randrange(8) for _ in range(rng.randint(0, 48))]
            dset = DelimiterSet.of(rng.sample(range(8), rng.randint(0, 3)))
            cfg = SnapConfig(rng.randint(1, 4), rng.randint(0, 20), "strict")
            assert snap(ys, dset, cfg) == max(cfg.l_min, brute_last_delim(ys, dset, cfg.window))
