"""Moment-matched binomial mixtures and exact trace-distribution TV.

Two disjointly supported populations over single-1 strings can have all
index-mixture moments up to ell agree exactly; their trace
distributions under the deletion channel are then provably close.  This
module solves the moment-matching system in exact rationals, builds the
hard pair, computes the total variation of the trace distributions
exactly (the single 1 either survives or not, and the surviving zeros
split into independent binomial counts left and right of it), and
houses the Poisson-binomial expansion machinery (alpha coefficients,
derivative-basis pmf expansion, the theta functional, and the
term-by-term bound checks) used to certify the closeness argument.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, e as _euler_e, factorial, sqrt

from .model import DomainError, Population, decimal_str, format_rational


class InvariantViolation(AssertionError):
    """A claim that must hold by construction failed."""


def comb0(a: int, b: int) -> int:
    if b < 0 or a < 0 or b > a:
        return 0
    return comb(a, b)


def gen_comb(a: int, k: int) -> Fraction:
    """The generalized binomial a(a−1)···(a−k+1)/k!, defined for any
    integer a (including negative) and k >= 0."""
    if k < 0:
        return Fraction(0)
    num = 1
    for j in range(k):
        num *= a - j
    return Fraction(num, factorial(k))


def binom_pmf(nn: int, rho: Fraction, r: int) -> Fraction:
    rho = Fraction(rho)
    c = comb0(nn, r)
    if not c:
        return Fraction(0)
    return c * rho**r * (1 - rho) ** (nn - r)


def unit_string(n: int, j: int) -> str:
    """The string e_j: all zeros except a single 1 at index j."""
    if not 0 <= j < n:
        raise DomainError(f"position {j} outside [0:{n - 1}]")
    return "0" * j + "1" + "0" * (n - 1 - j)


def falling_moment(nn: int, rho: Fraction, t: int) -> Fraction:
    """P_t(nn) = nn·(nn−1)···(nn−t)·rho^{t+1}, the falling moment
    E[B(B−1)···(B−t)] of B ~ Bin(nn, rho)."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    rho = Fraction(rho)
    out = rho ** (t + 1)
    for j in range(t + 1):
        out *= nn - j
    return out


# ---------------------------------------------------------------------------
# the moment-matching system
# ---------------------------------------------------------------------------


def _nullspace(rows, ncols):
    """Basis of the nullspace of a rational matrix, by exact RREF.

    Vectors are ordered by free column, so the first one is the
    lexicographically-first reduced basis vector."""
    mat = [list(r) for r in rows]
    pivots = []
    row = 0
    for col in range(ncols):
        piv = next((i for i in range(row, len(mat)) if mat[i][col]), None)
        if piv is None:
            continue
        mat[row], mat[piv] = mat[piv], mat[row]
        inv = Fraction(1) / mat[row][col]
        mat[row] = [x * inv for x in mat[row]]
        for i in range(len(mat)):
            if i != row and mat[i][col]:
                f = mat[i][col]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[row])]
        pivots.append(col)
        row += 1
    basis = []
    for free in range(ncols):
        if free in pivots:
            continue
        v = [Fraction(0)] * ncols
        v[free] = Fraction(1)
        for r_i, col in enumerate(pivots):
            v[col] = -mat[r_i][free]
        basis.append(tuple(v))
    return basis


def _shifted_falling(ell: int, shift: int):
    """Coefficients (ascending) of r(r−1)···(r−ell+1) evaluated at r+shift."""
    coeffs = [Fraction(1)]
    for j in range(ell):
        root = j - shift  # factor (r + shift − j)
        nxt = [Fraction(0)] * (len(coeffs) + 1)
        for i, c in enumerate(coeffs):
            nxt[i + 1] += c
            nxt[i] -= c * root
        coeffs = nxt
    return coeffs


def moment_match_solve(ell: int):
    """Coefficients c_0..c_ell with c_0·F(r) + Σ_i c_i·(F(r+i) + F(r−i)) ≡ 0,
    where F is the degree-ell falling factorial, scaled so that
    2·Σ_{i≥1} max(c_i, 0) + max(c_0, 0) = 1.

    The system has one equation per power of r; its nullspace is
    computed in exact rationals and the lexicographically-first reduced
    basis vector is taken.  The top equation (the r^ell coefficient)
    reads 2c_ell + ... + 2c_1 + c_0 = 0, which makes the two weight
    families built from the positive and negative parts carry equal
    total mass.
    """
    if ell < 1:
        raise DomainError("ell must be at least 1")
    cols = []
    cols.append(_shifted_falling(ell, 0))
    for i in range(1, ell + 1):
        plus = _shifted_falling(ell, i)
        minus = _shifted_falling(ell, -i)
        cols.append([a + b for a, b in zip(plus, minus)])
    rows = [[cols[j][deg] for j in range(ell + 1)] for deg in range(ell + 1)]
    basis = _nullspace(rows, ell + 1)
    if not basis:
        raise InvariantViolation("moment-matching system has no nonzero solution")
    c = list(basis[0])
    lead = next(x for x in reversed(c) if x)
    if lead < 0:
        c = [-x for x in c]
    scale = 2 * sum(max(x, Fraction(0)) for x in c[1:]) + max(c[0], Fraction(0))
    if scale <= 0:
        raise InvariantViolation("degenerate scaling mass")
    return tuple(x / scale for x in c)


@dataclass(frozen=True)
class MomentMatchedPair:
    ell: int
    n: int
    m: int  # (n−1)/2
    rho: Fraction
    c_vec: tuple
    S: tuple  # indices t in [0:2·ell] carrying pi_S weight
    T: tuple
    pi_S: Population
    pi_T: Population

    def side(self, which: str) -> Population:
        if which == "S":
            return self.pi_S
        if which == "T":
            return self.pi_T
        raise DomainError(f"side must be 'S' or 'T', not {which!r}")


def build_hard_pair(ell: int, n: int, rho: Fraction) -> MomentMatchedPair:
    """The disjoint pair pi_S, pi_T over e_{m+t} (t in [0:2·ell]) whose
    index mixtures agree on all moments up to ell.

    The positive parts of the solved coefficients become pi_S weights
    (a_{|t−ell|}), the negative parts pi_T weights; the scaling rule
    makes both total masses exactly 1.  Moment equality is re-verified
    on construction.
    """
    if n % 2 == 0:
        raise DomainError("n must be odd")
    if n < 4 * ell + 3:
        raise DomainError(f"need n >= {4 * ell + 3} for ell={ell}")
    rho = Fraction(rho)
    c = moment_match_solve(ell)
    m = (n - 1) // 2
    a = [max(x, Fraction(0)) for x in c]
    b = [max(-x, Fraction(0)) for x in c]
    s_idx, t_idx, s_pairs, t_pairs = [], [], [], []
    for t in range(2 * ell + 1):
        i = abs(t - ell)
        if a[i]:
            s_idx.append(t)
            s_pairs.append((unit_string(n, m + t), a[i]))
        if b[i]:
            t_idx.append(t)
            t_pairs.append((unit_string(n, m + t), b[i]))
    if set(s_idx) & set(t_idx):
        raise InvariantViolation("sign split must give disjoint supports")
    pair = MomentMatchedPair(
        ell=ell,
        n=n,
        m=m,
        rho=rho,
        c_vec=c,
        S=tuple(s_idx),
        T=tuple(t_idx),
        pi_S=Population.from_pairs(s_pairs),
        pi_T=Population.from_pairs(t_pairs),
    )
    if not verify_moment_equality(pair, ell):
        raise InvariantViolation("constructed pair fails moment equality")
    return pair


def _position_weights(X: Population) -> dict:
    out = {}
    for s, wt in X.support:
        if s.count("1") != 1:
            raise DomainError(f"support string {s!r} does not have exactly one 1")
        out[s.index("1")] = wt
    return out


def verify_moment_equality(pair: MomentMatchedPair, max_degree: int) -> bool:
    """Exact check that the index mixtures and the induced binomial
    mixtures of the two sides agree on raw moments up to max_degree."""
    if max_degree > pair.ell:
        raise DomainError("moment equality is only promised up to ell")
    ws = _position_weights(pair.pi_S)
    wt = _position_weights(pair.pi_T)
    for t in range(max_degree + 1):
        left = sum((w * Fraction(j) ** t for j, w in ws.items()), Fraction(0))
        right = sum((w * Fraction(j) ** t for j, w in wt.items()), Fraction(0))
        if left != right:
            return False
        # raw moments of the binomial mixtures Bin(position, rho), by
        # exact pmf summation
        def mixture_moment(weights):
            total = Fraction(0)
            for j, w in weights.items():
                total += w * sum(
                    (Fraction(r) ** t * binom_pmf(j, pair.rho, r) for r in range(j + 1)),
                    Fraction(0),
                )
            return total

        if mixture_moment(ws) != mixture_moment(wt):
            return False
    return True


def exact_trace_tv(X: Population, Y: Population, delta: Fraction) -> Fraction:
    """TV distance of the deletion-channel trace distributions, exactly.

    Both populations must be supported on single-1 strings.  The 1 is
    deleted with probability delta independently of everything else, and
    that event contributes no TV (the masses cancel); conditioned on
    survival the trace is 0^a 1 0^b with a ~ Bin(position, rho) and
    b ~ Bin(n−1−position, rho) independent, so the distance is
    rho · TV of the (a, b) mixtures, summed over the full grid.
    """
    if X.n != Y.n:
        raise DomainError("populations must have equal string length")
    delta = Fraction(delta)
    rho = 1 - delta
    n = X.n
    mu: dict = {}
    for j, w in _position_weights(X).items():
        mu[j] = mu.get(j, Fraction(0)) + w
    for j, w in _position_weights(Y).items():
        mu[j] = mu.get(j, Fraction(0)) - w
    mu = {j: w for j, w in mu.items() if w}
    total = Fraction(0)
    for a in range(n):
        for b in range(n - a):
            term = Fraction(0)
            for j, w in mu.items():
                term += w * binom_pmf(j, rho, a) * binom_pmf(n - 1 - j, rho, b)
            total += abs(term)
    return rho * total / 2


# ---------------------------------------------------------------------------
# Poisson-binomial expansion machinery
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PBDSpec:
    """A Poisson binomial distribution (independent Bernoulli(p_i)) with a
    reference binomial parameter p."""

    probs: tuple  # Fractions in [0, 1]
    p: Fraction

    def __post_init__(self):
        probs = tuple(Fraction(x) for x in self.probs)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "p", Fraction(self.p))
        if any(x < 0 or x > 1 for x in probs):
            raise DomainError("Bernoulli parameters must lie in [0, 1]")

    @property
    def nprime(self) -> int:
        return len(self.probs)


def step_spec(c: int, nprime: int, rho: Fraction, p: Fraction) -> PBDSpec:
    """The step vector v^{(c)}: c entries rho, then nprime − c zeros."""
    if not 0 <= c <= nprime:
        raise DomainError("need 0 <= c <= nprime")
    return PBDSpec(probs=(Fraction(rho),) * c + (Fraction(0),) * (nprime - c), p=Fraction(p))


def pbd_pmf(probs) -> list:
    """Exact pmf of a sum of independent Bernoullis, by convolution."""
    pmf = [Fraction(1)]
    for q in probs:
        q = Fraction(q)
        nxt = [x * (1 - q) for x in pmf] + [Fraction(0)]
        for i, x in enumerate(pmf):
            nxt[i + 1] += x * q
        pmf = nxt
    return pmf


def alpha_coefficient(spec: PBDSpec, t: int) -> Fraction:
    """alpha_t: the t-th elementary symmetric polynomial of (p_i − p)."""
    if not 0 <= t <= spec.nprime:
        raise DomainError("need 0 <= t <= nprime")
    esp = [Fraction(1)] + [Fraction(0)] * t
    for q in spec.probs:
        d = q - spec.p
        if not d:
            continue
        for j in range(min(t, len(esp)) - 1, -1, -1):
            esp[j + 1] += esp[j] * d
    return esp[t]


def alpha_step(c: int, nprime: int, rho: Fraction, p: Fraction, t: int) -> Fraction:
    """Closed-form alpha_t for the step vector v^{(c)}:
    Σ_j C(c, j)·C(nprime−c, t−j)·(rho−p)^j·(−p)^{t−j}.

    The binomials are the generalized (falling-factorial) kind: c may
    formally exceed nprime here, as happens in the C/D coefficient sums
    where the index runs past the pattern center."""
    rho, p = Fraction(rho), Fraction(p)
    out = Fraction(0)
    for j in range(t + 1):
        w = gen_comb(c, j) * gen_comb(nprime - c, t - j)
        if w:
            out += w * (rho - p) ** j * (-p) ** (t - j)
    return out


def _binomial_poly(nprime: int, r: int) -> list:
    """C(nprime, r)·p^r·(1−p)^{nprime−r} as a polynomial in p (ascending)."""
    coeffs = [Fraction(0)] * (nprime + 1)
    base = comb(nprime, r)
    for j in range(nprime - r + 1):
        coeffs[r + j] += base * comb(nprime - r, j) * (-1) ** j
    return coeffs


def _derivative(coeffs: list, times: int) -> list:
    for _ in range(times):
        coeffs = [Fraction(i) * c for i, c in enumerate(coeffs)][1:] or [Fraction(0)]
    return coeffs


def delta_t_B(nprime: int, p: Fraction, r: int, t: int) -> Fraction:
    """The derivative-basis kernel: ((nprime−t)!/nprime!)·(d/dp)^t of the
    binomial pmf at r, taken symbolically on the polynomial in p."""
    if not 0 <= t <= nprime:
        raise DomainError("need 0 <= t <= nprime")
    poly = _derivative(_binomial_poly(nprime, r), t)
    p = Fraction(p)
    val = Fraction(0)
    for c in reversed(poly):
        val = val * p + c
    return Fraction(factorial(nprime - t), factorial(nprime)) * val


def krawtchouk_pmf(spec: PBDSpec, r: int) -> Fraction:
    """Pr[U = r] via the expansion Σ_t alpha_t·Δ^t B, asserted equal to the
    convolution pmf (both exact)."""
    if not 0 <= r <= spec.nprime:
        raise DomainError("need 0 <= r <= nprime")
    total = sum(
        (alpha_coefficient(spec, t) * delta_t_B(spec.nprime, spec.p, r, t)
         for t in range(spec.nprime + 1)),
        Fraction(0),
    )
    direct = pbd_pmf(spec.probs)[r]
    if total != direct:
        raise InvariantViolation("expansion pmf disagrees with convolution pmf")
    return total


def theta_value(spec: PBDSpec) -> Fraction:
    """theta = (2·Σ(p_i−p)² + (Σ(p_i−p))²) / (2·nprime·p²·(1−p)²)."""
    p = spec.p
    if p <= 0 or p >= 1:
        raise DomainError("reference p must lie strictly inside (0, 1)")
    devs = [q - p for q in spec.probs]
    num = 2 * sum((d * d for d in devs), Fraction(0)) + sum(devs, Fraction(0)) ** 2
    return num / (2 * spec.nprime * p**2 * (1 - p) ** 2)


@dataclass(frozen=True)
class RoosTermReport:
    t: int
    lhs: Fraction  # |alpha_t| · l1 norm of the derivative-basis kernel
    bound: float  # sqrt(e) · theta^{t/2} · t^{1/4}
    holds: bool


def roos_term_check(spec: PBDSpec, t: int) -> RoosTermReport:
    """Compare the exact t-th expansion term mass against its bound."""
    if not 1 <= t <= spec.nprime:
        raise DomainError("need 1 <= t <= nprime")
    norm1 = sum(
        (abs(delta_t_B(spec.nprime, spec.p, r, t)) for r in range(spec.nprime + 1)),
        Fraction(0),
    )
    lhs = abs(alpha_coefficient(spec, t)) * norm1
    bound = sqrt(_euler_e) * float(theta_value(spec)) ** (t / 2) * t**0.25
    return RoosTermReport(t=t, lhs=lhs, bound=bound, holds=float(lhs) <= bound)


def cd_coefficient(pair: MomentMatchedPair, t: int, t_prime: int, p: Fraction, side: str) -> Fraction:
    """C_{t,t'}(p) (side 'S') or D_{t,t'}(p) (side 'T'):
    Σ_i pi(e_{m+i})·alpha_t(v^{(m+i)}; p)·alpha_{t'}(v^{(m−i)}; p), with the
    step-vector closed forms at nprime = m + ell.  The two sides agree
    exactly whenever t + t' <= ell."""
    if t < 0 or t_prime < 0:
        raise DomainError("t and t' must be nonnegative")
    pop = pair.side(side)
    nprime = pair.m + pair.ell
    weights = _position_weights(pop)
    out = Fraction(0)
    for pos, w in weights.items():
        i = pos - pair.m
        out += (
            w
            * alpha_step(pair.m + i, nprime, pair.rho, p, t)
            * alpha_step(pair.m - i, nprime, pair.rho, p, t_prime)
        )
    return out


def pair_report(pair: MomentMatchedPair, delta: Fraction) -> dict:
    """The hard-pair artifact: both populations plus a certificate block."""
    delta = Fraction(delta)
    tv = exact_trace_tv(pair.pi_S, pair.pi_T, delta)
    return {
        "pi_S": pair.pi_S.to_json_obj(),
        "pi_T": pair.pi_T.to_json_obj(),
        "certificate": {
            "ell": pair.ell,
            "n": pair.n,
            "c_vector": [format_rational(x) for x in pair.c_vec],
            "verified_moment_degrees": list(range(pair.ell + 1)),
            "delta": format_rational(delta),
            "trace_tv": format_rational(tv),
            "trace_tv_decimal": decimal_str(tv),
        },
    }
