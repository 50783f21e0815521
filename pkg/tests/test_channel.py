from fractions import Fraction as F

import pytest
from scipy import stats

from deckrec.channel import (
    ChannelParams,
    apply_deletion,
    counter_rand64,
    read_traces,
    sample_traces,
    write_traces,
)
from deckrec.model import Population


def _is_subsequence(v: str, z: str) -> bool:
    it = iter(z)
    return all(ch in it for ch in v)


def test_counter_rand_is_pure():
    a = counter_rand64(1, 2, 3)
    assert a == counter_rand64(1, 2, 3)
    assert 0 <= a < 2**64
    assert counter_rand64(1, 2, 4) != a
    assert counter_rand64(2, 2, 3) != a


def test_delta_edge_cases():
    keep_all = ChannelParams(delta=0.0, seed=5)
    drop_all = ChannelParams(delta=1.0, seed=5)
    assert apply_deletion("0110", keep_all, 0) == "0110"
    assert apply_deletion("0110", drop_all, 0) == ""


def test_trace_is_subsequence():
    params = ChannelParams(delta=0.4, seed=9)
    x = "1100101110"
    for i in range(200):
        assert _is_subsequence(apply_deletion(x, params, i), x)


def test_sampling_deterministic():
    X = Population.from_pairs([("0101", F(1, 2)), ("1111", F(1, 2))])
    params = ChannelParams(delta=0.3, seed=42)
    a = sample_traces(X, params, 100)
    b = sample_traces(X, params, 100)
    assert a.traces == b.traces
    c = sample_traces(X, params, 50)
    assert c.traces == a.traces[:50]  # counter-based: prefixes agree


def test_different_seeds_differ():
    X = Population.point_mass("01010101")
    a = sample_traces(X, ChannelParams(delta=0.5, seed=1), 50)
    b = sample_traces(X, ChannelParams(delta=0.5, seed=2), 50)
    assert a.traces != b.traces


def test_survival_rate_chi_square():
    # each bit survives with probability 1 − delta; pool the indicator
    # over many traces and chi-square against the expected split
    delta = 0.3
    params = ChannelParams(delta=delta, seed=7)
    x = "1" * 20
    kept = sum(len(apply_deletion(x, params, i)) for i in range(2000))
    total = 20 * 2000
    expected = [total * (1 - delta), total * delta]
    _, p = stats.chisquare([kept, total - kept], expected)
    assert p > 1e-4


def test_string_choice_frequencies():
    X = Population.from_pairs([("00", F(1, 4)), ("11", F(3, 4))])
    params = ChannelParams(delta=0.0, seed=3)
    batch = sample_traces(X, params, 4000)
    ones = sum(1 for t in batch.traces if t == "11")
    _, p = stats.chisquare([ones, 4000 - ones], [3000, 1000])
    assert p > 1e-4


def test_trace_file_round_trip(tmp_path):
    X = Population.from_pairs([("0101", F(1, 3)), ("1110", F(2, 3))])
    params = ChannelParams(delta=0.25, seed=11)
    batch = sample_traces(X, params, 40)
    path = tmp_path / "traces.txt"
    write_traces(path, batch)
    loaded = read_traces(path)
    assert loaded == batch
    # second write is byte-identical
    path2 = tmp_path / "traces2.txt"
    write_traces(path2, loaded)
    assert path.read_bytes() == path2.read_bytes()


def test_delta_exact_forms():
    assert ChannelParams(delta=0.25, seed=0).delta_exact == F(1, 4)
    assert ChannelParams(delta="3/10", seed=0).delta_exact == F(3, 10)
    # float deltas keep their exact binary value, bit-for-bit
    assert ChannelParams(delta=0.3, seed=0).delta_exact == F(0.3)


def test_invalid_delta():
    with pytest.raises(Exception):
        ChannelParams(delta=1.5, seed=0)
