import pytest

from lspsched.kv_cost import CacheModel, attention_cost, cache_append
from lspsched.seq_core import ContractViolation


class TestCacheAppend:
    def test_contiguous_extension(self):
        c = cache_append(CacheModel.init(10), {10, 11, 12})
        assert c.segments == [(0, 12)]
        assert c.gather_events == 0

    def test_fragmenting_append(self):
        c = cache_append(CacheModel.init(10), {11, 14})
        assert c.segments == [(0, 9), (11, 11), (14, 14)]
        assert c.gather_events == 1

    def test_filling_holes_merges(self):
        c = CacheModel.init(10)
        c.append({11, 14})
        c.append({10})
        c.append({12, 13})
        assert c.segments == [(0, 14)]
        assert c.gather_events == 3

    def test_double_commit(self):
        c = CacheModel.init(4)
        with pytest.raises(ContractViolation):
            c.append({3})

    def test_empty_cache_starts_at_zero(self):
        assert not CacheModel.init(0).append([0, 1])
        assert CacheModel.init(0).append([2])

    def test_gather_penalty_charged(self):
        c = CacheModel.init(4, gather_penalty=7.0)
        c.append({6})
        assert c.cost_units == 7.0


class TestAttentionCost:
    def test_values(self):
        assert attention_cost(0, 8) == 64
        assert attention_cost(56, 8) == 512

    def test_negative(self):
        with pytest.raises(ContractViolation):
            attention_cost(-1, 3)
