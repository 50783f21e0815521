"""Arbitrary-precision rational polynomials and the damping-polynomial chain.

The chain: Chebyshev T_r, the averaged polynomial g_r (equals 1 at 1,
bounded by 1 on [−1,1], small coefficients), its rescaling
psi_r(x) = g_r(1 − x/m), the product h built from psi factors (h(0)=1,
|h(b)| decays like 2^{−√b} on [0:m], controlled growth on the negative
side), and finally f = h(x − shift)^exponent and the d-variate
projection phi(t) = f(w·t).

Coefficients are exact rationals throughout; floats appear only in
reports that compare against transcendental bounds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .model import DomainError, format_rational, parse_rational


@dataclass(frozen=True)
class BigPoly:
    nvars: int
    terms: dict  # exponent tuple (len == nvars) -> nonzero Fraction

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def __eq__(self, other):
        return isinstance(other, BigPoly) and self.nvars == other.nvars and self.terms == other.terms


def poly_const(value, nvars: int = 1) -> BigPoly:
    value = Fraction(value)
    return BigPoly(nvars, {(0,) * nvars: value} if value else {})


def poly_var(index: int = 0, nvars: int = 1) -> BigPoly:
    e = [0] * nvars
    e[index] = 1
    return BigPoly(nvars, {tuple(e): Fraction(1)})


def poly_from_coeffs(coeffs) -> BigPoly:
    """Univariate polynomial from a low-to-high coefficient list."""
    return BigPoly(1, {(i,): Fraction(c) for i, c in enumerate(coeffs) if Fraction(c)})


def univariate_coeffs(p: BigPoly) -> list:
    if p.nvars != 1:
        raise DomainError("not univariate")
    out = [Fraction(0)] * (p.degree + 1)
    for (e,), c in p.terms.items():
        out[e] = c
    return out


def poly_add(a: BigPoly, b: BigPoly) -> BigPoly:
    if a.nvars != b.nvars:
        raise DomainError("arity mismatch")
    terms = dict(a.terms)
    for e, c in b.terms.items():
        s = terms.get(e, Fraction(0)) + c
        if s:
            terms[e] = s
        else:
            terms.pop(e, None)
    return BigPoly(a.nvars, terms)


def poly_scale(a: BigPoly, s) -> BigPoly:
    s = Fraction(s)
    if not s:
        return BigPoly(a.nvars, {})
    return BigPoly(a.nvars, {e: c * s for e, c in a.terms.items()})


def poly_mul(a: BigPoly, b: BigPoly) -> BigPoly:
    if a.nvars != b.nvars:
        raise DomainError("arity mismatch")
    terms: dict = {}
    for ea, ca in a.terms.items():
        for eb, cb in b.terms.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            s = terms.get(e, Fraction(0)) + ca * cb
            if s:
                terms[e] = s
            else:
                terms.pop(e, None)
    return BigPoly(a.nvars, terms)


def poly_pow(a: BigPoly, k: int) -> BigPoly:
    if k < 0:
        raise DomainError("negative power")
    result = poly_const(1, a.nvars)
    base = a
    while k:
        if k & 1:
            result = poly_mul(result, base)
        base = poly_mul(base, base) if k > 1 else base
        k >>= 1
    return result


def poly_eval(p: BigPoly, point) -> Fraction:
    point = tuple(Fraction(x) for x in point)
    if len(point) != p.nvars:
        raise DomainError(f"arity mismatch: {len(point)} args for {p.nvars}-variate polynomial")
    total = Fraction(0)
    for e, c in p.terms.items():
        term = c
        for x, k in zip(point, e):
            if k:
                term *= x**k
        total += term
    return total


def poly_norm1(p: BigPoly) -> Fraction:
    return sum((abs(c) for c in p.terms.values()), Fraction(0))


def poly_compose_univariate(outer: BigPoly, inner: BigPoly) -> BigPoly:
    """outer(inner(x)) by Horner's rule; outer must be univariate."""
    coeffs = univariate_coeffs(outer)
    result = poly_const(0, inner.nvars)
    for c in reversed(coeffs):
        result = poly_add(poly_mul(result, inner), poly_const(c, inner.nvars))
    return result


def poly_to_json_obj(p: BigPoly) -> dict:
    terms = [
        {"exps": list(e), "coef": format_rational(c)}
        for e, c in sorted(p.terms.items())
    ]
    return {"vars": p.nvars, "terms": terms}


def poly_from_json_obj(obj: dict) -> BigPoly:
    nvars = obj["vars"]
    terms = {}
    for t in obj["terms"]:
        e = tuple(t["exps"])
        if len(e) != nvars:
            raise DomainError("exponent arity mismatch in polynomial file")
        c = parse_rational(t["coef"])
        if c:
            terms[e] = c
    return BigPoly(nvars, terms)


def dump_poly(path, p: BigPoly) -> None:
    with open(path, "w") as fh:
        json.dump(poly_to_json_obj(p), fh)
        fh.write("\n")


def load_poly(path) -> BigPoly:
    with open(path) as fh:
        return poly_from_json_obj(json.load(fh))


# ---------------------------------------------------------------------------
# the construction chain
# ---------------------------------------------------------------------------


def chebyshev_T(r: int) -> BigPoly:
    """T_r by the recurrence T_{r+1} = 2x·T_r − T_{r−1}, T_0 = 1, T_1 = x."""
    if r < 0:
        raise DomainError("r must be nonnegative")
    prev = poly_const(1)
    if r == 0:
        return prev
    cur = poly_var()
    two_x = poly_from_coeffs([0, 2])
    for _ in range(r - 1):
        prev, cur = cur, poly_add(poly_mul(two_x, cur), poly_scale(prev, -1))
    return cur


def g_poly(r: int) -> BigPoly:
    """g_r = (T_0/2 + T_1 + ... + T_r)/(r + 1/2); g_r(1) = 1."""
    if r < 1:
        raise DomainError("r must be at least 1")
    acc = poly_scale(chebyshev_T(0), Fraction(1, 2))
    for j in range(1, r + 1):
        acc = poly_add(acc, chebyshev_T(j))
    return poly_scale(acc, Fraction(2, 2 * r + 1))


def psi_poly(r: int, m: int) -> BigPoly:
    """psi_r(x) = g_r(1 − x/m); psi_r(0) = 1."""
    if m < 1:
        raise DomainError("m must be at least 1")
    inner = poly_from_coeffs([1, Fraction(-1, m)])
    return poly_compose_univariate(g_poly(r), inner)


def h_plan(m: int) -> tuple:
    """(m_tilde, beta, [(r_i, exponent_i)]) for the product defining h:
    factors psi_{2^(beta−i+2)} raised to 2^i for i = 1..beta, where
    m_tilde = 4^beta is the smallest power of 4 that is >= m."""
    if m < 1:
        raise DomainError("m must be at least 1")
    beta = 1
    while 4**beta < m:
        beta += 1
    return 4**beta, beta, [(2 ** (beta - i + 2), 2**i) for i in range(1, beta + 1)]


def build_h(m: int) -> BigPoly:
    m_tilde, _, factors = h_plan(m)
    h = poly_const(1)
    for r, e in factors:
        h = poly_mul(h, poly_pow(psi_poly(r, m_tilde), e))
    return h


def h_norm1_product_bound(m: int) -> int:
    """The product bound for ||h||_1: prod over factors of (3^{r_i}·2)^{e_i}."""
    _, _, factors = h_plan(m)
    out = 1
    for r, e in factors:
        out *= (3**r * 2) ** e
    return out


def _ln(x: Fraction) -> float:
    """Natural log of a positive rational with huge numerator/denominator."""
    if x <= 0:
        raise DomainError("log of nonpositive value")
    return math.log(x.numerator) - math.log(x.denominator)


@dataclass(frozen=True)
class HReport:
    m: int
    degree: int
    norm1: Fraction
    norm1_product_bound: int
    neg_constant: float
    violations: list  # (b, bound_ln, actual_ln); negative b = negative-side check


def verify_h_properties(m: int, neg_constant: float = 24.0, m_cap: int = 1024) -> HReport:
    """Check h(0)=1 exactly, |h(b)| <= 2^{−√b} and h(−b) <= exp(C·√b·log2 m)
    for b in [1:m].  Violations are reported, not asserted: the bounds hold
    with these constants only for large m."""
    if m > m_cap:
        raise DomainError(f"m={m} exceeds the build capability cap {m_cap}")
    h = build_h(m)
    violations = []
    h0 = poly_eval(h, (0,))
    if h0 != 1:
        violations.append((0, 0.0, _ln(abs(h0)) if h0 else float("-inf")))
    log2m = math.log2(m) if m > 1 else 1.0
    for b in range(1, m + 1):
        val = poly_eval(h, (b,))
        bound_ln = -math.sqrt(b) * math.log(2)
        actual_ln = _ln(abs(val)) if val else float("-inf")
        if actual_ln > bound_ln:
            violations.append((b, bound_ln, actual_ln))
        nval = poly_eval(h, (-b,))
        nbound_ln = neg_constant * math.sqrt(b) * log2m
        nactual_ln = _ln(abs(nval)) if nval else float("-inf")
        if nactual_ln > nbound_ln:
            violations.append((-b, nbound_ln, nactual_ln))
    return HReport(
        m=m,
        degree=h.degree,
        norm1=poly_norm1(h),
        norm1_product_bound=h_norm1_product_bound(m),
        neg_constant=neg_constant,
        violations=violations,
    )


def nominal_f_exponent(m: int, beta: int) -> int:
    """ceil(3·(log2 m)^{beta+1}), the exponent the analysis places on h."""
    if m < 2:
        return 3
    return math.ceil(3 * math.log2(m) ** (beta + 1))


def build_f(h: BigPoly, shift: int, exponent: int) -> BigPoly:
    """f(x) = h(x − shift)^exponent, expanded; f(shift) = 1."""
    if exponent < 1:
        raise DomainError("exponent must be at least 1")
    shifted = poly_compose_univariate(h, poly_from_coeffs([-shift, 1]))
    return poly_pow(shifted, exponent)


def build_phi(f: BigPoly, w: tuple) -> BigPoly:
    """phi(t_1..t_d) = f(w_1 t_1 + ... + w_d t_d), expanded.

    Checks the coefficient-mass bound ||phi||_1 <= ||f||_1·(d·max w)^deg f.
    """
    d = len(w)
    if d < 1 or any(int(x) != x or x < 1 for x in w):
        raise DomainError("w must be a nonempty tuple of positive integers")
    coeffs = univariate_coeffs(f)
    linear = BigPoly(
        d, {tuple(1 if i == j else 0 for i in range(d)): Fraction(w[j]) for j in range(d)}
    )
    phi = poly_const(0, d)
    power = poly_const(1, d)
    for j, c in enumerate(coeffs):
        if j:
            power = poly_mul(power, linear)
        if c:
            phi = poly_add(phi, poly_scale(power, c))
    bound = poly_norm1(f) * Fraction(d * max(w)) ** f.degree
    assert poly_norm1(phi) <= bound, "coefficient-mass bound violated"
    return phi


@dataclass(frozen=True)
class FactoredPhi:
    """phi(t) = f(w·t) with f = h(x − shift)^exponent kept factored.

    Evaluation powers the value of h instead of expanding the
    polynomial, which keeps the pipeline runnable when the expanded f
    would be astronomically large.
    """

    h: BigPoly
    shift: int
    exponent: int
    w: tuple

    @property
    def nvars(self) -> int:
        return len(self.w)

    @property
    def degree(self) -> int:
        return self.h.degree * self.exponent

    def f_eval(self, b) -> Fraction:
        return poly_eval(self.h, (Fraction(b) - self.shift,)) ** self.exponent

    def eval(self, point) -> Fraction:
        if len(point) != len(self.w):
            raise DomainError("arity mismatch")
        return self.f_eval(sum(wi * Fraction(t) for wi, t in zip(self.w, point)))


def eval_poly_or_factored(phi, point) -> Fraction:
    if isinstance(phi, FactoredPhi):
        return phi.eval(point)
    return poly_eval(phi, point)
