"""Witness restrictions, covers, projected profiles, and the identity suite.

Given two populations X, Y with positive TV distance, a short chain of
constructions extracts a single exact rational that separates them:

  1. a witness restriction (T, c) on which the match probabilities
     differ (found by sorting support-probability gaps and isolating one
     string by coordinate splitting);
  2. the table Δ(T) = restrict(X,T,c) − restrict(Y,T,c) over all
     d-subsets T, which is constant on coordinate-type classes (a cover),
     and whose classes group into few magnitude bands (a group cover);
  3. a random integer projection w collapsing Δ onto the line,
     b ↦ Γ(b) = Σ_{w(T)=b} Δ(T), whose step structure selects a shift
     m_alpha and a damping strength beta;
  4. the damped projection phi(t) = f(w·t) with f = h(x − m_alpha)^e,
     for which Σ_T phi(T)·Δ(T) = Σ_b f(b)·Γ(b) exactly.

The module also houses the exact combinatorial identities expressing
monomials in coordinate positions as linear forms in deck entries.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from math import comb, factorial

from .channel import counter_rand64
from .deck import exact_deck_population, patterns
from .model import (
    DomainError,
    Population,
    Restriction,
    decimal_str,
    format_rational,
    restrict,
    tv_distance,
)
from .poly import (
    BigPoly,
    FactoredPhi,
    build_f,
    build_h,
    build_phi,
    eval_poly_or_factored,
    nominal_f_exponent,
    poly_norm1,
    _ln,
)

DELTA_N_CAP = 30
DELTA_D_CAP = 3


class InvariantViolation(AssertionError):
    """A structural claim that must hold by construction failed."""


def comb0(a: int, b: int) -> int:
    """C(a, b) with the convention that out-of-range arguments give 0."""
    if b < 0 or a < 0 or b > a:
        return 0
    return comb(a, b)


# ---------------------------------------------------------------------------
# witness restriction
# ---------------------------------------------------------------------------


def find_witness(X: Population, Y: Population):
    """A restriction (T, c) with |restrict(X) − restrict(Y)| = gap > 0.

    Sort the per-string probability gaps p_i in decreasing order, find
    the first index i* where the next gap drops by a factor 4·ell, and
    isolate one of the top-i* strings by repeatedly splitting on a
    disagreeing coordinate (at most floor(log2(2·ell)) splits).  T is
    padded up to exactly that size with the smallest unused coordinates,
    the pattern extended by the isolated string's bits.
    """
    if tv_distance(X, Y) == 0:
        raise DomainError("populations are identical; no witness exists")
    ell = max(X.ell, Y.ell)
    d = int(math.log2(2 * ell))
    n = X.n
    if d > n:
        raise DomainError(f"witness size {d} exceeds string length {n}")
    strings = sorted(set(X.strings()) | set(Y.strings()))
    gaps = sorted(
        ((abs(X.weight(s) - Y.weight(s)), s) for s in strings),
        key=lambda g: (-g[0], g[1]),
    )
    p = [g for g, _ in gaps]
    i_star = None
    for i in range(1, len(p) + 1):
        nxt = p[i] if i < len(p) else Fraction(0)
        if 4 * ell * nxt <= p[i - 1]:
            i_star = i
            break
    assert i_star is not None and p[i_star - 1] > 0
    working = [s for _, s in gaps[:i_star]]
    coords: list = []
    pattern: list = []
    while len(working) > 1:
        for t in range(n):
            if t in coords:
                continue
            zeros = [s for s in working if s[t] == "0"]
            if 0 < len(zeros) < len(working):
                ones = [s for s in working if s[t] == "1"]
                # keep the smaller side so the set at least halves; break
                # value ties toward '0'
                side, ch = (zeros, "0") if len(zeros) <= len(ones) else (ones, "1")
                coords.append(t)
                pattern.append(ch)
                working = side
                break
        else:
            raise InvariantViolation("distinct strings admit a splitting coordinate")
    isolated = working[0]
    for t in range(n):
        if len(coords) >= d:
            break
        if t not in coords:
            coords.append(t)
            pattern.append(isolated[t])
    order = sorted(range(len(coords)), key=lambda i: coords[i])
    r = Restriction(
        coords=tuple(coords[i] for i in order),
        pattern="".join(pattern[i] for i in order),
    )
    gap = abs(restrict(X, r) - restrict(Y, r))
    return r, gap


# ---------------------------------------------------------------------------
# delta tables, covers, group covers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeltaTable:
    n: int
    d: int
    c: str
    values: dict  # sorted coord tuple -> Fraction (all d-subsets present)

    def support(self):
        return [T for T, v in self.values.items() if v]

    def sup_norm(self) -> Fraction:
        return max((abs(v) for v in self.values.values()), default=Fraction(0))


def delta_table(X: Population, Y: Population, c: str, d: int) -> DeltaTable:
    if X.n != Y.n:
        raise DomainError("populations must have equal string length")
    n = X.n
    if d > n or len(c) != d:
        raise DomainError("need |c| = d <= n")
    if n > DELTA_N_CAP or d > DELTA_D_CAP:
        raise DomainError(f"delta table caps exceeded (n <= {DELTA_N_CAP}, d <= {DELTA_D_CAP})")
    values = {}
    for T in combinations(range(n), d):
        r = Restriction(coords=T, pattern=c)
        values[T] = restrict(X, r) - restrict(Y, r)
    return DeltaTable(n=n, d=d, c=c, values=values)


@dataclass(frozen=True)
class CoverClass:
    anchor: tuple
    members: tuple  # tuple of coord tuples, anchor included
    value: Fraction


@dataclass(frozen=True)
class Cover:
    classes: tuple  # tuple of CoverClass
    ell: int | None = None
    lam: int | None = None
    group_partition: tuple | None = None  # tuple of tuples of class indices

    def anchors(self):
        return [cl.anchor for cl in self.classes]


def _coordinate_types(X: Population, Y: Population):
    xs, ys = X.strings(), Y.strings()
    return [tuple(s[t] for s in xs) + tuple(s[t] for s in ys) for t in range(X.n)]


def build_cover(X: Population, Y: Population, dt: DeltaTable) -> Cover:
    """Partition supp(Δ) into coordinate-type classes with greedy anchors.

    Two subsets are equivalent when their sorted elements have matching
    coordinate types (the column of support-string bits at that index).
    Δ is constant on each class; the anchor (the componentwise-least
    member, built greedily from smallest indices of each type) is
    dominated by every member.
    """
    types = _coordinate_types(X, Y)
    ell = max(X.ell, Y.ell)
    classes: dict = {}
    for T in dt.support():
        key = tuple(types[t] for t in T)
        classes.setdefault(key, []).append(T)
    out = []
    for key in sorted(classes):
        members = sorted(classes[key])
        anchor = []
        prev = -1
        for u in key:
            t = next((i for i in range(prev + 1, dt.n) if types[i] == u), None)
            assert t is not None, "class nonempty, so a greedy anchor exists"
            anchor.append(t)
            prev = t
        anchor = tuple(anchor)
        value = dt.values[members[0]]
        for T in members:
            if dt.values[T] != value:
                raise InvariantViolation("Δ is not constant on a type class")
            if any(a > t for a, t in zip(anchor, T)):
                raise InvariantViolation("anchor not dominated by a member")
        if anchor not in members:
            raise InvariantViolation("anchor must belong to its own class")
        out.append(CoverClass(anchor=anchor, members=tuple(members), value=value))
    L = len(out)
    if L > 2 ** (2 * dt.d * ell):
        raise InvariantViolation(f"cover size {L} exceeds 2^(2dl)")
    seen = [T for cl in out for T in cl.members]
    if sorted(seen) != sorted(dt.support()):
        raise InvariantViolation("cover classes do not partition supp(Δ)")
    return Cover(classes=tuple(out), ell=ell)


def build_group_cover(cover: Cover, ell: int) -> Cover:
    """Greedy smallest-first grouping of classes by |Δ(anchor)| within a
    multiplicative band of (2·ell+2)!.  The number of groups is at most
    ell; exceeding it would falsify the band-count claim."""
    if not cover.classes:
        raise DomainError("cover must be nonempty")
    lam = factorial(2 * ell + 2)
    remaining = sorted(range(len(cover.classes)), key=lambda i: abs(cover.classes[i].value))
    groups = []
    while remaining:
        v = abs(cover.classes[remaining[0]].value)
        here = tuple(i for i in remaining if abs(cover.classes[i].value) <= lam * v)
        groups.append(here)
        remaining = [i for i in remaining if i not in set(here)]
    if len(groups) > ell:
        raise InvariantViolation(f"group count {len(groups)} exceeds ell={ell}")
    return Cover(classes=cover.classes, ell=ell, lam=lam, group_partition=tuple(groups))


# ---------------------------------------------------------------------------
# projection and the Γ profile
# ---------------------------------------------------------------------------


def project(w: tuple, T: tuple) -> int:
    return sum(wi * t for wi, t in zip(w, T))


def projection_weights(L: int, d: int, anchors, seed: int, max_attempts: int = 1000):
    """Draw w uniformly from [1:L²]^d until all anchor images are distinct.

    Returns (w, rejections).  Each draw succeeds with probability at
    least 1/2 when L is at least the number of anchors.
    """
    if len(set(anchors)) != len(anchors):
        raise DomainError("anchors must be distinct")
    span = L * L
    for attempt in range(max_attempts):
        w = tuple(counter_rand64(seed, attempt, i) % span + 1 for i in range(d))
        images = [project(w, T) for T in anchors]
        if len(set(images)) == len(images):
            return w, attempt
    raise InvariantViolation("no separating projection found; anchors may coincide")


@dataclass(frozen=True)
class GammaProfile:
    w: tuple
    m_nominal: int  # the analysis' range bound d(n−1)L²
    m_range: int  # the bound actually spanning supp(Γ): d(n−1)·max(w)
    gamma: dict  # b -> Fraction (nonzero entries only)
    group_stats: tuple  # (kappa_i, v_i) per group, parallel to group_partition
    tau_seq: tuple
    m_seq: tuple
    alpha: int
    beta: int

    @property
    def r(self) -> int:
        return len(self.tau_seq) - 1


def _gamma_restricted(dt: DeltaTable, cover: Cover, w: tuple, min_kappa, group_stats) -> dict:
    """Γ_p: the projection of Δ restricted to groups with kappa >= min_kappa."""
    out: dict = {}
    for (kappa, _), idxs in zip(group_stats, cover.group_partition):
        if kappa < min_kappa:
            continue
        for i in idxs:
            cl = cover.classes[i]
            for T in cl.members:
                b = project(w, T)
                s = out.get(b, Fraction(0)) + cl.value
                if s:
                    out[b] = s
                else:
                    out.pop(b, None)
    return out


def gamma_profile(dt: DeltaTable, cover: Cover, w: tuple) -> GammaProfile:
    """Project Δ to Γ and run the step-sequence / anchor-shift selection.

    The (alpha, beta) induction follows the analysis verbatim: start at
    alpha=0, beta=3; at each later step keep (alpha, beta) when
    tau_{p+1}·2·n^d·λ·exp(sqrt(m_alpha − m_{p+1})·log2(m)^{beta+3})
    stays below |Γ_p(m_alpha)|, otherwise jump to alpha=p+1, beta+4.
    The comparison is done in log space (the Δ side uses exact big-int
    logarithms)."""
    if cover.group_partition is None:
        raise DomainError("cover must carry a group partition")
    d, n = dt.d, dt.n
    L = len(cover.classes)
    m_nominal = d * (n - 1) * L * L
    m_range = d * (n - 1) * max(w)

    group_stats = []
    for idxs in cover.group_partition:
        anchors = [(project(w, cover.classes[i].anchor), i) for i in idxs]
        kappa, i_min = min(anchors)
        group_stats.append((kappa, abs(cover.classes[i_min].value)))
    group_stats = tuple(group_stats)

    # step sequences
    tau_seq: list = []
    m_seq: list = []
    cutoff = None
    while True:
        pool = [(k, v) for k, v in group_stats if cutoff is None or k < cutoff]
        if not pool:
            break
        tau = max(v for _, v in pool)
        mloc = min(k for k, v in pool if v == tau)
        tau_seq.append(tau)
        m_seq.append(mloc)
        cutoff = mloc
    r = len(tau_seq) - 1

    lam = cover.lam if cover.lam is not None else factorial(2 * (cover.ell or 1) + 2)
    log2m = math.log2(m_nominal) if m_nominal > 1 else 1.0
    alpha, beta = 0, 3
    for p in range(r):
        gamma_p = _gamma_restricted(dt, cover, w, m_seq[p], group_stats)
        at_alpha = gamma_p.get(m_seq[alpha], Fraction(0))
        lhs_ln = (
            _ln(tau_seq[p + 1])
            + math.log(2)
            + d * math.log(n)
            + math.log(lam)
            + math.sqrt(m_seq[alpha] - m_seq[p + 1]) * log2m ** (beta + 3)
        )
        rhs_ln = _ln(abs(at_alpha)) if at_alpha else float("-inf")
        if lhs_ln > rhs_ln:
            alpha, beta = p + 1, beta + 4
    gamma = _gamma_restricted(dt, cover, w, 0, group_stats)
    return GammaProfile(
        w=w,
        m_nominal=m_nominal,
        m_range=m_range,
        gamma=gamma,
        group_stats=group_stats,
        tau_seq=tuple(tau_seq),
        m_seq=tuple(m_seq),
        alpha=alpha,
        beta=beta,
    )


def separation_sum(phi, dt: DeltaTable, profile: GammaProfile | None = None) -> Fraction:
    """Σ_T phi(T)·Δ(T), exact.

    When a Γ profile is supplied and phi carries its factored form
    f(w·t), the regrouped sum Σ_b f(b)·Γ(b) is computed as well and the
    two routes are asserted exactly equal."""
    direct = Fraction(0)
    for T, v in dt.values.items():
        if v:
            direct += eval_poly_or_factored(phi, T) * v
    if profile is not None:
        if not isinstance(phi, FactoredPhi):
            raise DomainError("gamma route needs the factored phi (it carries f and w)")
        if phi.w != profile.w:
            raise DomainError("profile and phi disagree on w")
        via_gamma = sum(
            (phi.f_eval(b) * g for b, g in profile.gamma.items()), Fraction(0)
        )
        if via_gamma != direct:
            raise InvariantViolation("regrouped sum disagrees with the direct sum")
    return direct


# ---------------------------------------------------------------------------
# exact identities: monomials as deck linear forms
# ---------------------------------------------------------------------------


def g_basis_value(j: tuple, t: tuple, n: int, k: int) -> int:
    """The product-of-binomials basis value: the number of k-subsets of
    [0:n−1] whose j-th chosen elements are exactly the t's."""
    d = len(j)
    if len(t) != d:
        raise DomainError("j and t must have equal length")
    out = comb0(t[0], j[0])
    for i in range(1, d):
        out *= comb0(t[i] - t[i - 1] - 1, j[i] - j[i - 1] - 1)
    out *= comb0(n - t[d - 1] - 1, k - j[d - 1] - 1)
    return out


def pascal_coefficients(r: int):
    """v with t^r = Σ_β v_β·C(t, β): v_β = Σ_i (−1)^{β−i}·C(β,i)·i^r."""
    if r < 0:
        raise DomainError("r must be nonnegative")
    return tuple(
        sum((-1) ** (b - i) * comb(b, i) * (i**r if (i, r) != (0, 0) else 1) for i in range(b + 1))
        for b in range(r + 1)
    )


def _pbc(prefix: tuple, beta: tuple) -> int:
    """C(x_1, β_1)·C(x_2−x_1−1, β_2)···C(x_d−x_{d−1}−1, β_d)."""
    out = comb0(prefix[0], beta[0])
    for i in range(1, len(beta)):
        out *= comb0(prefix[i] - prefix[i - 1] - 1, beta[i])
    return out


def verify_IDd(beta: tuple, n: int, k: int, t: tuple) -> bool:
    """Check Σ_j g_j(t)·PBC_j(β) = PBC_t(β)·C(n−Σβ−d, k−Σβ−d) exactly."""
    d = len(beta)
    if len(t) != d:
        raise DomainError("beta and t must have equal length")
    if sum(beta) > k - d:
        raise DomainError("need Σβ <= k − d")
    lhs = sum(
        g_basis_value(j, t, n, k) * _pbc(j, beta) for j in combinations(range(k), d)
    )
    rhs = _pbc(t, beta) * comb0(n - sum(beta) - d, k - sum(beta) - d)
    return lhs == rhs


def monomial_to_g_weights(r: tuple, n: int, k: int) -> dict:
    """Weights w_j with t_1^{r_1}···t_d^{r_d} = Σ_j w_j·g_j(t) on sorted t.

    Three steps: rewrite the monomial in gap variables s (t_i = s_1+…+s_i
    + i−1), expand each gap power in the binomial basis C(s_i, β_i), and
    express each product of binomial coordinates in the g basis."""
    d = len(r)
    if sum(r) > k - d:
        raise DomainError("need Σr <= k − d")
    if d > k or k > n:
        raise DomainError("need d <= k <= n")

    # step 1: the monomial as a polynomial in the gap variables
    mono: dict = {(0,) * d: Fraction(1)}
    for i, ri in enumerate(r):
        lin: dict = {}
        base = [0] * d
        lin[tuple(base)] = Fraction(i)  # constant i−1+1... see below
        # t_i = s_1 + ... + s_{i+1} + i  (0-based i here, so the constant is i)
        for j in range(i + 1):
            e = [0] * d
            e[j] = 1
            lin[tuple(e)] = Fraction(1)
        if lin[(0,) * d] == 0:
            del lin[(0,) * d]
        for _ in range(ri):
            nxt: dict = {}
            for e1, c1 in mono.items():
                for e2, c2 in lin.items():
                    e = tuple(a + b for a, b in zip(e1, e2))
                    s = nxt.get(e, Fraction(0)) + c1 * c2
                    if s:
                        nxt[e] = s
                    else:
                        nxt.pop(e, None)
            mono = nxt

    # steps 2 and 3: binomial basis per gap coordinate, then the g basis
    pascal_cache = {}
    weights: dict = {}
    for alpha, coef in mono.items():
        ranges = []
        for a in alpha:
            if a not in pascal_cache:
                pascal_cache[a] = pascal_coefficients(a)
            ranges.append(range(a + 1))
        for beta in product(*ranges):
            pcoef = 1
            for a, b in zip(alpha, beta):
                pcoef *= pascal_cache[a][b]
            if not pcoef:
                continue
            denom = comb0(n - sum(beta) - d, k - sum(beta) - d)
            assert denom > 0, "admissible beta keeps the divisor positive"
            scale = coef * pcoef
            for j in combinations(range(k), d):
                pj = _pbc(j, beta)
                if pj:
                    wj = weights.get(j, Fraction(0)) + Fraction(scale * pj, denom)
                    if wj:
                        weights[j] = wj
                    else:
                        weights.pop(j, None)
    return weights


def deck_linear_form(X: Population, j: tuple, c: str, k: int) -> Fraction:
    """Σ_t g_j(t)·restrict(X, t, c), two ways (direct and via the k-deck).

    The deck route is C(n,k)·Σ over deck entries z with z_j = c; the two
    must agree exactly, and the common value is returned."""
    n = X.n
    d = len(j)
    if len(c) != d or d > k:
        raise DomainError("need |j| = |c| = d <= k")
    direct = Fraction(0)
    for t in combinations(range(n), d):
        g = g_basis_value(j, t, n, k)
        if g:
            direct += g * restrict(X, Restriction(coords=t, pattern=c))
    deck = exact_deck_population(X, k)
    via_deck = comb(n, k) * sum(
        (deck.entry(z) for z in patterns(k) if all(z[jj] == ch for jj, ch in zip(j, c))),
        Fraction(0),
    )
    if direct != via_deck:
        raise InvariantViolation("deck linear form mismatch")
    return direct


# ---------------------------------------------------------------------------
# end-to-end certificate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SeparationCertificate:
    n: int
    ell: int
    d: int
    witness: Restriction
    gap: Fraction
    delta_inf: Fraction
    L: int
    q: int
    lam: int
    w: tuple
    rejections: int
    m_nominal: int
    m_range: int
    tau_seq: tuple
    m_seq: tuple
    alpha: int
    beta: int
    h_m: int
    exponent: int
    exponent_nominal: int
    phi_degree: int
    phi_norm1: Fraction | None
    separation_value: Fraction
    seed: int

    def to_json_obj(self) -> dict:
        def rat(x):
            return {"exact": format_rational(x), "decimal": decimal_str(x)}

        return {
            "n": self.n,
            "ell": self.ell,
            "d": self.d,
            "witness": {"coords": list(self.witness.coords), "pattern": self.witness.pattern},
            "gap": rat(self.gap),
            "delta_sup_norm": rat(self.delta_inf),
            "cover": {"L": self.L, "q": self.q, "lambda": self.lam},
            "projection": {"w": list(self.w), "rejections": self.rejections, "seed": self.seed},
            "gamma": {
                "m_nominal": self.m_nominal,
                "m_range": self.m_range,
                "tau_seq": [format_rational(t) for t in self.tau_seq],
                "m_seq": list(self.m_seq),
                "alpha": self.alpha,
                "beta": self.beta,
            },
            "polynomial": {
                "h_m": self.h_m,
                "exponent": self.exponent,
                "exponent_nominal": self.exponent_nominal,
                "phi_degree": self.phi_degree,
                "phi_norm1": None if self.phi_norm1 is None else rat(self.phi_norm1),
            },
            "separation_sum": rat(self.separation_value),
            "routes_agree": True,
        }


def build_certificate(
    X: Population,
    Y: Population,
    seed: int = 0,
    h_m_cap: int = 16,
    exponent_cap: int = 2,
    expand_phi_degree_cap: int = 80,
) -> SeparationCertificate:
    """Run the full pipeline witness → cover → group cover → projection →
    Γ → (alpha, beta) → phi and return the certificate.

    The analysis' nominal values for the h range and the f exponent are
    astronomically large even at toy sizes, so the polynomial stage runs
    with capped parameters (recorded alongside the nominal exponent);
    the regrouping identity between the two sum routes is exact for any
    choice, and is asserted."""
    ell = max(X.ell, Y.ell)
    witness, gap = find_witness(X, Y)
    d = len(witness.coords)
    dt = delta_table(X, Y, witness.pattern, d)
    cover = build_group_cover(build_cover(X, Y, dt), ell)
    L = len(cover.classes)
    w, rejections = projection_weights(L, d, cover.anchors(), seed)
    profile = gamma_profile(dt, cover, w)

    h_m = max(1, min(profile.m_nominal, h_m_cap))
    exponent_nominal = nominal_f_exponent(max(profile.m_nominal, 2), profile.beta)
    exponent = min(exponent_nominal, exponent_cap)
    h = build_h(h_m)
    shift = profile.m_seq[profile.alpha]
    phi = FactoredPhi(h=h, shift=shift, exponent=exponent, w=w)
    value = separation_sum(phi, dt, profile=profile)

    phi_norm1 = None
    if phi.degree <= expand_phi_degree_cap:
        expanded = build_phi(build_f(h, shift, exponent), w)
        phi_norm1 = poly_norm1(expanded)

    return SeparationCertificate(
        n=X.n,
        ell=ell,
        d=d,
        witness=witness,
        gap=gap,
        delta_inf=dt.sup_norm(),
        L=L,
        q=len(cover.group_partition),
        lam=cover.lam,
        w=w,
        rejections=rejections,
        m_nominal=profile.m_nominal,
        m_range=profile.m_range,
        tau_seq=profile.tau_seq,
        m_seq=profile.m_seq,
        alpha=profile.alpha,
        beta=profile.beta,
        h_m=h_m,
        exponent=exponent,
        exponent_nominal=exponent_nominal,
        phi_degree=phi.degree,
        phi_norm1=phi_norm1,
        separation_value=value,
        seed=seed,
    )


def dump_certificate(path, cert: SeparationCertificate) -> None:
    with open(path, "w") as fh:
        json.dump(cert.to_json_obj(), fh, indent=2)
        fh.write("\n")
