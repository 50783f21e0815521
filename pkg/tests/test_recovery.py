from fractions import Fraction as F

import pytest

from deckrec.channel import ChannelParams, sample_traces
from deckrec.model import Population, tv_distance
from deckrec.recovery import (
    RecoveryConfig,
    ResourceError,
    enumerate_candidates,
    recover,
    required_sample_size,
)


def test_required_sample_size_values():
    # k/(xi^2 rho^{2k}) with everything exact
    assert required_sample_size(3, F(1, 10), F(3, 10)) == 2550
    assert required_sample_size(2, F(1, 3), F(3, 10), multiplier=4) == 300
    assert required_sample_size(1, F(1), F(0)) == 1


def test_enumerate_candidates_point_masses_first():
    cfg = RecoveryConfig(ell=2, k=1, xi=F(1))
    cands = list(enumerate_candidates(2, cfg))
    # support size 1 first, lexicographic
    assert cands[0].support == Population.point_mass("00").support
    assert cands[1].support == Population.point_mass("01").support
    sizes = [len(c.support) for c in cands]
    assert sizes == sorted(sizes)


def test_enumerate_candidates_counts():
    # ell=2, grid=1/2: 4 point masses + C(4,2) half-half mixtures
    cfg = RecoveryConfig(ell=2, k=1, xi=F(1))
    assert len(list(enumerate_candidates(2, cfg))) == 4 + 6


def test_enumerate_requires_integer_grid():
    with pytest.raises(Exception):
        list(enumerate_candidates(2, RecoveryConfig(ell=1, k=1, xi=F(2, 3))))


def test_recover_point_mass_noiseless():
    X = Population.point_mass("0101")
    batch = sample_traces(X, ChannelParams(delta=0.0, seed=0), 5)
    result = recover(batch, RecoveryConfig(ell=1, k=2, xi=F(1, 2)))
    assert result.estimate == X
    assert result.achieved_deck_distance == 0
    assert result.samples_used == 5


def test_recover_point_mass_noisy():
    X = Population.point_mass("010101")
    m = required_sample_size(3, F(1, 10), F(0.3))
    batch = sample_traces(X, ChannelParams(delta=0.3, seed=17), m)
    result = recover(batch, RecoveryConfig(ell=1, k=3, xi=F(1, 10)))
    assert result.estimate == X


def test_recover_mixture():
    X = Population.from_pairs([("00000000", F(1, 3)), ("11111111", F(2, 3))])
    m = required_sample_size(2, F(1, 3), F(0.3), multiplier=4)
    batch = sample_traces(X, ChannelParams(delta=0.3, seed=5), m)
    result = recover(batch, RecoveryConfig(ell=2, k=2, xi=F(1, 3)))
    assert tv_distance(result.estimate, X) <= F(1, 6)


def test_pool_cap():
    X = Population.point_mass("0" * 20)
    batch = sample_traces(X, ChannelParams(delta=0.0, seed=0), 1)
    with pytest.raises(ResourceError):
        recover(batch, RecoveryConfig(ell=1, k=1, xi=F(1)))


def test_recover_deterministic():
    X = Population.from_pairs([("0011", F(1, 2)), ("1100", F(1, 2))])
    batch = sample_traces(X, ChannelParams(delta=0.2, seed=8), 200)
    a = recover(batch, RecoveryConfig(ell=2, k=2, xi=F(1, 2)))
    b = recover(batch, RecoveryConfig(ell=2, k=2, xi=F(1, 2)))
    assert a == b
