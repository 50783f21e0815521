"""Subsequence occurrence counts and k-decks.

The k-deck of a string x of length n is the 2^k-vector whose entry at
pattern v is #(v, x)/C(n, k), where #(v, x) counts index subsets T with
x_T = v.  Population decks are weight-averaged string decks.  The
estimator from traces divides mean occurrence counts by the channel
attenuation (1−δ)^k·C(n, k); it is unbiased and deliberately not
renormalized.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import comb

from .channel import TraceBatch
from .model import (
    DomainError,
    Population,
    check_bits,
    decimal_str,
    format_rational,
    parse_rational,
)

K_CAP = 24  # 2^k deck entries; anything larger is out of desk range


@dataclass(frozen=True)
class Deck:
    k: int
    kind: str  # "exact" | "estimated"
    entries: dict  # pattern str -> Fraction; absent entries are zero

    def entry(self, v: str) -> Fraction:
        return self.entries.get(v, Fraction(0))

    def total(self) -> Fraction:
        return sum(self.entries.values(), Fraction(0))

    def sum_deviation(self) -> Fraction:
        """How far the (possibly unnormalized) entries are from summing to 1."""
        return self.total() - 1

    def to_json_obj(self) -> dict:
        if self.kind == "exact":
            ent = {v: format_rational(w) for v, w in sorted(self.entries.items())}
        else:
            ent = {v: _decimal12(w) for v, w in sorted(self.entries.items())}
        return {"k": self.k, "kind": self.kind, "entries": ent}

    @staticmethod
    def from_json_obj(obj: dict) -> "Deck":
        entries = {check_bits(v): parse_rational(w) for v, w in obj["entries"].items()}
        return Deck(k=obj["k"], kind=obj["kind"], entries=entries)

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_obj(), fh, indent=2)
            fh.write("\n")

    @staticmethod
    def load(path) -> "Deck":
        with open(path) as fh:
            return Deck.from_json_obj(json.load(fh))


def _decimal12(x: Fraction) -> str:
    return decimal_str(x, 12)


def patterns(k: int):
    """All length-k bit strings, lexicographic (v_0 is the most significant bit)."""
    return ("".join(bits) for bits in product("01", repeat=k))


def count_occurrences(v: str, z: str) -> int:
    """Number of index subsets T of z with z_T = v, by prefix DP."""
    check_bits(v)
    check_bits(z)
    if len(v) > len(z):
        return 0
    # dp[j] = number of occurrences of v[:j] in the prefix of z seen so far
    dp = [0] * (len(v) + 1)
    dp[0] = 1
    for ch in z:
        for j in range(len(v), 0, -1):
            if v[j - 1] == ch:
                dp[j] += dp[j - 1]
    return dp[len(v)]


def exact_deck_string(x: str, k: int) -> Deck:
    check_bits(x)
    n = len(x)
    if not 1 <= k <= n:
        raise DomainError(f"need 1 <= k <= n, got k={k}, n={n}")
    if k > K_CAP:
        raise DomainError(f"k={k} exceeds the implementation cap {K_CAP}")
    denom = comb(n, k)
    entries = {}
    for v in patterns(k):
        c = count_occurrences(v, x)
        if c:
            entries[v] = Fraction(c, denom)
    return Deck(k=k, kind="exact", entries=entries)


def exact_deck_population(X: Population, k: int) -> Deck:
    entries: dict = {}
    for s, w in X.support:
        for v, val in exact_deck_string(s, k).entries.items():
            entries[v] = entries.get(v, Fraction(0)) + w * val
    return Deck(k=k, kind="exact", entries=entries)


def estimate_deck(batch: TraceBatch, k: int, delta) -> Deck:
    """Unbiased deck estimate: mean occurrence count over traces, divided
    by (1−δ)^k·C(n, k).  Entries are exact rationals (counts are integers
    and δ is taken as an exact rational), and are not renormalized."""
    if not batch.traces:
        raise DomainError("cannot estimate a deck from an empty batch")
    n = batch.n
    if k > n:
        raise DomainError(f"k={k} exceeds n={n}")
    if k > K_CAP:
        raise DomainError(f"k={k} exceeds the implementation cap {K_CAP}")
    delta = Fraction(delta)
    if delta >= 1:
        raise DomainError("delta must be < 1 for estimation")
    m = len(batch.traces)
    scale = (1 - delta) ** k * comb(n, k) * m
    totals: Counter = Counter()
    for trace, mult in Counter(batch.traces).items():
        for v in patterns(k):
            c = count_occurrences(v, trace)
            if c:
                totals[v] += c * mult
    entries = {v: Fraction(c) / scale for v, c in totals.items()}
    return Deck(k=k, kind="estimated", entries=entries)


def deck_distance(A: Deck, B: Deck):
    """ℓ∞ distance between two decks of the same k."""
    if A.k != B.k:
        raise DomainError(f"deck k mismatch: {A.k} vs {B.k}")
    keys = set(A.entries) | set(B.entries)
    return max((abs(A.entry(v) - B.entry(v)) for v in keys), default=Fraction(0))


def minimal_distinguishing_k(x: str, y: str) -> int:
    """Smallest k whose k-decks of x and y differ (k = n always works)."""
    check_bits(x)
    check_bits(y)
    if x == y:
        raise DomainError("strings must differ")
    if len(x) != len(y):
        raise DomainError("strings must have equal length")
    for k in range(1, len(x) + 1):
        for v in patterns(k):
            if count_occurrences(v, x) != count_occurrences(v, y):
                return k
    raise AssertionError("unreachable: k = n always distinguishes distinct strings")


def deck_signature(x: str, k: int) -> tuple:
    """Occurrence-count vector over all length-k patterns (for sweeps)."""
    return tuple(count_occurrences(v, x) for v in patterns(k))
