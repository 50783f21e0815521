import math
from fractions import Fraction as F

import pytest

from deckrec.poly import (
    BigPoly,
    FactoredPhi,
    _ln,
    build_f,
    build_h,
    build_phi,
    chebyshev_T,
    dump_poly,
    g_poly,
    h_norm1_product_bound,
    h_plan,
    load_poly,
    nominal_f_exponent,
    poly_add,
    poly_eval,
    poly_mul,
    poly_norm1,
    poly_pow,
    psi_poly,
    verify_h_properties,
)

GRID = [F(i, 16) for i in range(-16, 17)]  # dense rational grid of [-1, 1]


def test_poly_arithmetic_basics():
    x = BigPoly(1, {(1,): F(1)})
    p = poly_add(poly_mul(x, x), x)  # x^2 + x
    assert poly_eval(p, (F(3),)) == 12
    assert poly_eval(poly_pow(p, 3), (F(2),)) == 6**3
    assert poly_norm1(p) == 2


def test_poly_json_round_trip(tmp_path):
    p = poly_pow(BigPoly(2, {(1, 0): F(1), (0, 1): F(-2, 3)}), 3)
    path = tmp_path / "poly.json"
    dump_poly(path, p)
    assert load_poly(path) == p


def test_chebyshev_known_values():
    # T_2 = 2x^2 - 1, T_3 = 4x^3 - 3x
    assert chebyshev_T(2).terms == {(2,): F(2), (0,): F(-1)}
    assert chebyshev_T(3).terms == {(3,): F(4), (1,): F(-3)}
    for r in range(12):
        T = chebyshev_T(r)
        assert poly_eval(T, (F(1),)) == 1
        assert poly_eval(T, (F(-1),)) == (-1) ** r


def test_chebyshev_cos_identity():
    # T_r(cos t) = cos(r t), checked in floats
    for r in range(9):
        T = chebyshev_T(r)
        for t in (0.3, 1.1, 2.4):
            val = sum(float(c) * math.cos(t) ** e[0] for e, c in T.terms.items())
            assert abs(val - math.cos(r * t)) < 1e-9


def test_chebyshev_norm_bound():
    for r in range(31):
        assert poly_norm1(chebyshev_T(r)) <= 3**r


def test_g_normalization():
    for r in range(1, 21):
        assert poly_eval(g_poly(r), (F(1),)) == 1


def test_g_bounded_on_interval():
    # |g_r(x)| <= 1 on [-1, 1]
    for r in range(1, 21):
        g = g_poly(r)
        assert all(abs(poly_eval(g, (x,))) <= 1 for x in GRID)


def test_g_growth_off_interval():
    # 1 <= g_r(1+a) <= e^{3 r sqrt(a)} for a in [0, 1]
    for r in range(1, 21):
        g = g_poly(r)
        for a in [F(i, 8) for i in range(9)]:
            val = poly_eval(g, (1 + a,))
            assert val >= 1
            assert _ln(val) <= 3 * r * math.sqrt(a) + 1e-9


def test_g_decay_inside_interval():
    # g_r(x)^2 * r^2 * 2(1-x) <= 1 on [-1, 1), exactly
    for r in range(1, 21):
        g = g_poly(r)
        for x in GRID[:-1]:
            assert poly_eval(g, (x,)) ** 2 * r * r * 2 * (1 - x) <= 1


def test_psi_matches_g():
    m = 8
    for r in (2, 4):
        psi = psi_poly(r, m)
        g = g_poly(r)
        for b in range(-m, m + 1):
            assert poly_eval(psi, (F(b),)) == poly_eval(g, (1 - F(b, m),))


def test_h_plan_structure():
    m_tilde, beta, factors = h_plan(16)
    assert (m_tilde, beta) == (16, 2)
    assert factors == [(8, 2), (4, 4)]
    assert sum(r * e for r, e in factors) == 32
    m_tilde, beta, _ = h_plan(17)
    assert (m_tilde, beta) == (64, 3)


def test_h_at_zero_and_degree():
    for m in (4, 16):
        h = build_h(m)
        assert poly_eval(h, (F(0),)) == 1
        _, _, factors = h_plan(m)
        assert h.degree == sum(r * e for r, e in factors)


def test_h_norm_bound():
    for m in (4, 16):
        assert poly_norm1(build_h(m)) <= h_norm1_product_bound(m)


def test_h_properties_report():
    report = verify_h_properties(16)
    assert report.m == 16
    assert not report.violations
    assert report.norm1 <= report.norm1_product_bound


def test_nominal_exponent():
    assert nominal_f_exponent(16, 3) == math.ceil(3 * 4.0**4)
    assert nominal_f_exponent(1, 3) == 3  # degenerate range floors at 3


def test_factored_phi_matches_expansion():
    h = build_h(4)
    shift, exponent, w = 3, 2, (2, 5)
    f = build_f(h, shift, exponent)
    phi = build_phi(f, w)
    fact = FactoredPhi(h=h, shift=shift, exponent=exponent, w=w)
    for point in ((F(0), F(1)), (F(2), F(3)), (F(1), F(4))):
        assert poly_eval(phi, point) == fact.eval(point)
    assert phi.degree == fact.degree
