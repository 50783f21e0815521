"""Bit strings, populations, restrictions, and distribution-level utilities.

Bit strings are plain Python ``str`` objects over the characters '0' and
'1', indexed 0-based.  Populations are immutable distributions over at
most ``ell`` distinct strings of a common length with exact-rational
weights summing to 1.  Everything in this layer is exact; floating
point never appears.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence


class DomainError(ValueError):
    """Raised when an operation's precondition is violated."""


def check_bits(s: str) -> str:
    if not isinstance(s, str) or any(ch not in "01" for ch in s):
        raise DomainError(f"not a bit string: {s!r}")
    return s


def parse_rational(text) -> Fraction:
    """Parse 'p/q', decimal, or integer text into an exact Fraction."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    return Fraction(str(text))


def format_rational(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)


def decimal_str(x: Fraction, digits: int = 12) -> str:
    """A ``digits``-significant-figure decimal rendering of an exact value."""
    from decimal import Decimal, localcontext

    x = Fraction(x)
    if x == 0:
        return "0"
    with localcontext() as ctx:
        ctx.prec = digits
        return str(Decimal(x.numerator) / Decimal(x.denominator))


@dataclass(frozen=True)
class Population:
    """A distribution over at most ``ell`` distinct equal-length bit strings.

    ``support`` is kept sorted lexicographically; weights are strictly
    positive Fractions summing to exactly 1.
    """

    n: int
    ell: int
    support: tuple  # tuple of (str, Fraction), sorted by string

    @staticmethod
    def from_pairs(pairs: Iterable, ell: int | None = None) -> "Population":
        items = [(check_bits(s), Fraction(w)) for s, w in pairs]
        if not items:
            raise DomainError("population must have nonempty support")
        n = len(items[0][0])
        if any(len(s) != n for s, _ in items):
            raise DomainError("support strings must share a common length")
        if len({s for s, _ in items}) != len(items):
            raise DomainError("support strings must be distinct")
        if any(w <= 0 for _, w in items):
            raise DomainError("weights must be strictly positive")
        if sum(w for _, w in items) != 1:
            raise DomainError("weights must sum to exactly 1")
        items.sort(key=lambda sw: sw[0])
        if ell is None:
            ell = len(items)
        if ell < len(items):
            raise DomainError(f"support size {len(items)} exceeds declared bound {ell}")
        return Population(n=n, ell=ell, support=tuple(items))

    @staticmethod
    def point_mass(s: str, ell: int | None = None) -> "Population":
        return Population.from_pairs([(s, Fraction(1))], ell=ell)

    def weight(self, s: str) -> Fraction:
        for t, w in self.support:
            if t == s:
                return w
        return Fraction(0)

    def strings(self) -> tuple:
        return tuple(s for s, _ in self.support)

    def to_json_obj(self) -> dict:
        return {
            "n": self.n,
            "support": [{"string": s, "weight": format_rational(w)} for s, w in self.support],
        }

    @staticmethod
    def from_json_obj(obj: dict, ell: int | None = None) -> "Population":
        n = obj["n"]
        pairs = [(e["string"], parse_rational(e["weight"])) for e in obj["support"]]
        pop = Population.from_pairs(pairs, ell=ell)
        if pop.n != n:
            raise DomainError(f"declared n={n} does not match support length {pop.n}")
        return pop

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_obj(), fh, indent=2)
            fh.write("\n")

    @staticmethod
    def load(path, ell: int | None = None) -> "Population":
        with open(path) as fh:
            return Population.from_json_obj(json.load(fh), ell=ell)


@dataclass(frozen=True)
class Restriction:
    """A coordinate subset T (strictly increasing) and a pattern c with |c| = |T|."""

    coords: tuple  # tuple of ints, strictly increasing
    pattern: str

    def __post_init__(self):
        check_bits(self.pattern)
        if len(self.coords) != len(self.pattern):
            raise DomainError("pattern length must match coordinate count")
        if any(self.coords[i] >= self.coords[i + 1] for i in range(len(self.coords) - 1)):
            raise DomainError("coordinates must be strictly increasing")
        if self.coords and self.coords[0] < 0:
            raise DomainError("coordinates must be nonnegative")


def matches(s: str, r: Restriction) -> bool:
    return all(s[t] == ch for t, ch in zip(r.coords, r.pattern))


def restrict(X: Population, r: Restriction) -> Fraction:
    """Probability that a draw from X agrees with r.pattern on r.coords."""
    if r.coords and r.coords[-1] >= X.n:
        raise DomainError(f"restriction coordinate {r.coords[-1]} out of range for n={X.n}")
    return sum((w for s, w in X.support if matches(s, r)), Fraction(0))


def tv_distance(X: Population, Y: Population) -> Fraction:
    """Total variation distance (1/2)·Σ|X(s) − Y(s)| over the support union."""
    if X.n != Y.n:
        raise DomainError("populations must have equal string length")
    keys = set(X.strings()) | set(Y.strings())
    return sum((abs(X.weight(s) - Y.weight(s)) for s in keys), Fraction(0)) / 2


def _round_to_grid(w: Fraction, grid: Fraction) -> Fraction:
    # nearest multiple of grid, half-up
    q, rem = divmod(w, grid)
    if 2 * rem >= grid:
        q += 1
    return q * grid


def quantize(X: Population, grid: Fraction) -> Population:
    pop, _ = quantize_with_drops(X, grid)
    return pop


def quantize_with_drops(X: Population, grid) -> tuple:
    """Round all weights but the last onto multiples of ``grid``.

    The last (lexicographically largest) support string absorbs the
    rounding error so the total stays exactly 1.  Strings whose weight
    would become nonpositive are dropped, the rest renormalized, and
    the rule re-applied; dropped strings are returned alongside.
    """
    grid = Fraction(grid)
    if not 0 < grid <= 1:
        raise DomainError("grid must lie in (0, 1]")
    dropped: list = []
    pairs = list(X.support)
    while True:
        total = sum(w for _, w in pairs)
        scaled = [(s, w / total) for s, w in pairs]
        new = [(s, _round_to_grid(w, grid)) for s, w in scaled[:-1]]
        last_s, _ = scaled[-1]
        new.append((last_s, 1 - sum(w for _, w in new)))
        bad = [s for s, w in new if w <= 0]
        if not bad:
            return Population.from_pairs(new, ell=X.ell), dropped
        dropped.extend(bad)
        pairs = [(s, w) for s, w in pairs if s not in bad]
        if not pairs:
            raise DomainError("quantization dropped the entire support")
