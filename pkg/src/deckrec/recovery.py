"""Deck-distance recovery over a quantized candidate grid.

The recovery algorithm estimates the k-deck from traces, enumerates all
populations on at most ell pool strings whose weights are positive
multiples of xi/ell summing to 1, and returns the candidate whose exact
deck is closest in sup norm to the estimate (ties broken by enumeration
order, which is lexicographic).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb

from .channel import TraceBatch
from .deck import estimate_deck, exact_deck_string, patterns
from .model import DomainError, Population

POOL_N_CAP = 14  # largest n for which the full 2^n pool is enumerated


class ResourceError(RuntimeError):
    """Raised when an enumeration would exceed the configured caps."""


@dataclass(frozen=True)
class RecoveryConfig:
    ell: int
    k: int
    xi: Fraction
    candidate_pool: tuple | None = None
    sample_multiplier: float = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "xi", Fraction(self.xi))
        if self.ell < 1 or self.k < 1:
            raise DomainError("ell and k must be positive")
        if not 0 < self.xi <= 1:
            raise DomainError("xi must lie in (0, 1]")

    def grid(self) -> Fraction:
        return self.xi / self.ell


@dataclass(frozen=True)
class RecoveryResult:
    estimate: Population
    achieved_deck_distance: Fraction
    candidates_scanned: int
    samples_used: int


def required_sample_size(k: int, xi, delta, multiplier=1) -> int:
    """ceil(multiplier · k / (xi² (1−δ)^{2k}))."""
    xi = Fraction(xi)
    delta = Fraction(delta)
    if not 0 <= delta < 1:
        raise DomainError("delta must lie in [0, 1)")
    if xi <= 0:
        raise DomainError("xi must be positive")
    value = Fraction(multiplier) * k / (xi**2 * (1 - delta) ** (2 * k))
    return math.ceil(value)


def _compositions(total: int, parts: int):
    """Positive integer compositions of total into exactly ``parts`` parts,
    in lexicographic order."""
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def candidate_pool(n: int, cfg: RecoveryConfig) -> tuple:
    if cfg.candidate_pool is not None:
        if not cfg.candidate_pool:
            raise DomainError("explicit candidate pool is empty")
        return tuple(sorted(cfg.candidate_pool))
    if n > POOL_N_CAP:
        raise ResourceError(
            f"n={n} exceeds the default pool cap {POOL_N_CAP}; supply candidate_pool"
        )
    return tuple("".join(bits) for bits in patterns(n))


def enumerate_candidates(n: int, cfg: RecoveryConfig):
    """Yield every population on ≤ ell pool strings with weights that are
    positive multiples of xi/ell summing to 1, in lexicographic order of
    (support size, support tuple, weight tuple)."""
    grid = cfg.grid()
    units = 1 / grid
    if units.denominator != 1:
        raise DomainError(f"grid {grid} does not divide 1; no candidate sums to 1")
    units = int(units)
    pool = candidate_pool(n, cfg)
    for size in range(1, min(cfg.ell, units, len(pool)) + 1):
        for support in combinations(pool, size):
            for parts in _compositions(units, size):
                yield Population.from_pairs(
                    [(s, Fraction(p) * grid) for s, p in zip(support, parts)],
                    ell=cfg.ell,
                )


def recover(batch: TraceBatch, cfg: RecoveryConfig) -> RecoveryResult:
    if not batch.traces:
        raise DomainError("batch must be nonempty")
    n = batch.n
    if cfg.k > n:
        raise DomainError(f"k={cfg.k} exceeds n={n}")
    estimate = estimate_deck(batch, cfg.k, batch.params.delta_exact)

    grid = cfg.grid()
    units = 1 / grid
    if units.denominator != 1:
        raise DomainError(f"grid {grid} does not divide 1; no candidate sums to 1")
    units = int(units)
    pool = candidate_pool(n, cfg)
    keys = tuple(patterns(cfg.k))
    cnk = comb(n, cfg.k)

    # Everything is rational with a known common denominator, so the scan
    # runs on plain integers: scale the estimate and each pool-string deck
    # so candidate decks are integer combinations.
    q_fracs = [estimate.entry(v) for v in keys]
    denom_q = math.lcm(*(f.denominator for f in q_fracs)) if q_fracs else 1
    D = math.lcm(denom_q, units * cnk)
    q_scaled = [int(f * D) for f in q_fracs]
    per_unit = D // (units * cnk)  # scale of one grid unit of one occurrence count
    string_decks = {}
    for s in pool:
        d = exact_deck_string(s, cfg.k)
        string_decks[s] = [int(d.entry(v) * cnk) * per_unit for v in keys]

    best = None  # (distance_scaled, rank, support, parts)
    rank = 0
    for size in range(1, min(cfg.ell, units, len(pool)) + 1):
        for support in combinations(pool, size):
            decks = [string_decks[s] for s in support]
            for parts in _compositions(units, size):
                dist = 0
                for idx, q in enumerate(q_scaled):
                    cand = 0
                    for p, dvec in zip(parts, decks):
                        cand += p * dvec[idx]
                    diff = abs(q - cand)
                    if diff > dist:
                        dist = diff
                if best is None or dist < best[0]:
                    best = (dist, rank, support, parts)
                rank += 1
    assert best is not None, "candidate enumeration produced nothing"
    dist, _, support, parts = best
    winner = Population.from_pairs(
        [(s, Fraction(p) * grid) for s, p in zip(support, parts)], ell=cfg.ell
    )
    return RecoveryResult(
        estimate=winner,
        achieved_deck_distance=Fraction(dist, D),
        candidates_scanned=rank,
        samples_used=len(batch.traces),
    )
