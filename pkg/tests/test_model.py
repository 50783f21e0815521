import json
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deckrec.model import (
    DomainError,
    Population,
    Restriction,
    decimal_str,
    format_rational,
    parse_rational,
    quantize,
    quantize_with_drops,
    restrict,
    tv_distance,
)


def test_parse_rational_forms():
    assert parse_rational("1/3") == F(1, 3)
    assert parse_rational("0.25") == F(1, 4)
    assert parse_rational(2) == F(2)
    assert parse_rational(F(3, 7)) == F(3, 7)


def test_format_round_trip():
    for x in (F(0), F(1), F(-3, 7), F(22, 11)):
        assert parse_rational(format_rational(x)) == x


def test_decimal_str_digits():
    assert decimal_str(F(0)) == "0"
    assert decimal_str(F(1, 3)).startswith("0.3333333333")


def test_population_validation():
    with pytest.raises(DomainError):
        Population.from_pairs([("01", F(1, 2)), ("10", F(1, 3))])  # sum != 1
    with pytest.raises(DomainError):
        Population.from_pairs([("01", F(1, 2)), ("011", F(1, 2))])  # lengths differ
    with pytest.raises(DomainError):
        Population.from_pairs([("01", F(1)), ("01", F(0))])  # nonpositive weight
    with pytest.raises(DomainError):
        Population.from_pairs([("0a", F(1))])


def test_population_sorted_and_point_mass():
    X = Population.from_pairs([("11", F(1, 2)), ("00", F(1, 2))])
    assert [s for s, _ in X.support] == ["00", "11"]
    P = Population.point_mass("010")
    assert P.weight("010") == 1 and P.weight("011") == 0


def test_population_json_round_trip(tmp_path):
    X = Population.from_pairs([("0101", F(1, 3)), ("1111", F(2, 3))])
    path = tmp_path / "pop.json"
    X.dump(path)
    with open(path) as fh:
        obj = json.load(fh)
    assert obj["n"] == 4
    assert Population.load(path) == X


def test_restriction_validation():
    with pytest.raises(DomainError):
        Restriction(coords=(1, 0), pattern="00")  # not increasing
    with pytest.raises(DomainError):
        Restriction(coords=(0,), pattern="01")  # length mismatch


def test_restrict_values():
    X = Population.from_pairs([("0101", F(1, 3)), ("1111", F(2, 3))])
    assert restrict(X, Restriction((0,), "0")) == F(1, 3)
    assert restrict(X, Restriction((1, 3), "11")) == 1
    assert restrict(X, Restriction((0, 1), "10")) == 0


def test_tv_distance_basic():
    X = Population.point_mass("01")
    Y = Population.point_mass("10")
    assert tv_distance(X, X) == 0
    assert tv_distance(X, Y) == 1
    Z = Population.from_pairs([("01", F(1, 2)), ("10", F(1, 2))])
    assert tv_distance(X, Z) == F(1, 2)


def test_quantize_exact_grid_weights_unchanged():
    X = Population.from_pairs([("00", F(1, 3)), ("11", F(2, 3))])
    assert quantize(X, F(1, 3)) == X


def test_quantize_tv_bound_small_support():
    X = Population.from_pairs([("000", F(17, 100)), ("011", F(33, 100)), ("110", F(1, 2))])
    grid = F(1, 8)
    Q = quantize(X, grid)
    assert all(w % grid == 0 for _, w in Q.support)
    assert sum(w for _, w in Q.support) == 1
    assert tv_distance(X, Q) <= grid


@settings(max_examples=150, deadline=None)
@given(st.lists(st.integers(1, 50), min_size=1, max_size=3), st.integers(2, 12))
def test_quantize_property(raw, denom):
    # support size <= 3: quantization moves TV by at most the grid step
    total = sum(raw)
    strings = [format(i, "06b") for i in range(len(raw))]
    X = Population.from_pairs([(s, F(r, total)) for s, r in zip(strings, raw)])
    grid = F(1, denom)
    Q, dropped = quantize_with_drops(X, grid)
    assert sum(w for _, w in Q.support) == 1
    assert all(w > 0 and w % grid == 0 for _, w in Q.support)
    assert tv_distance(X, Q) <= grid + sum(X.weight(s) for s in dropped)
