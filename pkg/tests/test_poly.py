import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lienard_lab.errors import InvalidParameters, NoOuterBranch
from lienard_lab.poly import (
    MAX_DEGREE,
    Poly,
    count_roots_in,
    even_odd_decompose,
    half_line_minima,
    odd_unique_root,
    outer_branches,
    parse_coeffs,
    real_roots,
)

coeff = st.floats(min_value=-10, max_value=10, allow_nan=False).map(lambda v: round(v, 3))
polys = st.lists(coeff, min_size=1, max_size=8).map(lambda cs: Poly(tuple(cs)))


def test_eval_examples():
    assert Poly((0, 0, 1, 1))(-0.75) == -27 / 256
    assert Poly((1, 1, 1, 1))(1.0) == 4.0
    assert Poly((3, -2, 5))(0.0) == 0.0


def test_deriv_matches_exact_difference():
    f = Poly((1, -2, 0.5, 3))
    x = Fraction(7, 10)
    exact = sum(k * Fraction(c) * x ** (k - 1) for k, c in enumerate(f.coeffs, start=1))
    assert f.deriv(0.7) == pytest.approx(float(exact), rel=1e-15)


def test_trailing_zeros_trimmed_and_degree():
    f = Poly((1.0, 0.0, 2.0, 0.0, 0.0))
    assert f.degree == 3
    assert f.leading == 2.0


def test_degree_cap_and_nonfinite_rejected():
    Poly(tuple([1.0] * MAX_DEGREE))
    with pytest.raises(InvalidParameters):
        Poly(tuple([1.0] * (MAX_DEGREE + 1)))
    with pytest.raises(InvalidParameters):
        Poly((1.0, float("nan")))


def test_parse_coeffs_reports_position():
    assert parse_coeffs("0,0,1,1") == Poly.from_abcd(1, 1, 0, 0)
    with pytest.raises(InvalidParameters, match="coefficient 3"):
        parse_coeffs("1,2,x,4")


def test_even_odd_examples():
    e, o = even_odd_decompose(Poly.from_abcd(1, 1, 1, 1))
    assert e == Poly((0, 1, 0, 1)) and o == Poly((1, 0, 1))
    e, o = even_odd_decompose(Poly.from_abcd(1, 0, 0, 0))
    assert e == Poly((0, 0, 0, 1)) and o == Poly(())
    e, o = even_odd_decompose(Poly.from_abcd(1, 0, 0, 1))
    assert e == Poly((0, 0, 0, 1)) and o == Poly((1,))


@settings(max_examples=60, deadline=None)
@given(polys)
def test_even_odd_partition_on_grid(f):
    e, o = even_odd_decompose(f)
    assert e + o == f
    for x in np.linspace(-10, 10, 100):
        x = float(x)
        scale = max(1.0, abs(f(x)), abs(e(x)), abs(o(x)))
        assert abs(e(-x) - e(x)) <= 1e-12 * scale
        assert abs(o(-x) + o(x)) <= 1e-12 * scale
        assert abs(e(x) + o(x) - f(x)) <= 1e-12 * scale


def test_odd_unique_root_examples():
    assert odd_unique_root(Poly((1,)))
    assert not odd_unique_root(Poly((-1, 0, 1)))
    assert odd_unique_root(Poly((1, 0, 1)))
    assert odd_unique_root(Poly((0, 0, 1)))  # x^3: a triple root, still only x = 0
    with pytest.raises(InvalidParameters):
        odd_unique_root(Poly((1, 1)))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=1, max_size=4))
def test_odd_unique_root_against_companion_roots(cs):
    o = Poly(tuple(c if k % 2 == 0 else 0 for k, c in enumerate(cs)))
    if not o.coeffs:
        return
    # oracle: eigenvalues of the companion matrix (numpy), filtered for real nonzero roots
    roots = np.roots(list(reversed(o.full)))
    real_nonzero = [r for r in roots if abs(r.imag) < 1e-7 and abs(r.real) > 1e-6]
    assert odd_unique_root(o) == (len(real_nonzero) == 0)


def test_real_roots_known_factorisation():
    # (x - 1)^2 (x + 2) (x - 0.5) = x^4 - 0.5x^3 - 3x^2 + 3.5x - 1
    roots = real_roots((-1.0, 3.5, -3.0, -0.5, 1.0))
    assert roots == pytest.approx([-2.0, 0.5, 1.0], abs=1e-12)
    assert count_roots_in((-1.0, 3.5, -3.0, -0.5, 1.0), 0.0, None) == 2


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-6, 6), min_size=1, max_size=4, unique=True))
def test_real_roots_of_products(rs):
    p = np.poly1d([1.0])
    for r in rs:
        p *= np.poly1d([1.0, -float(r)])
    got = real_roots(tuple(reversed(p.coeffs.tolist())))
    assert got == pytest.approx(sorted(rs), abs=1e-9)


def test_half_line_minima_examples():
    m = half_line_minima(Poly.from_abcd(1, 0, 0, 0))
    assert m.m_minus == 0 and m.m_plus == 0
    m = half_line_minima(Poly.from_abcd(1, 1, 0, 0))
    assert m.m_plus == 0
    assert m.m_minus == pytest.approx(-27 / 256, abs=1e-12)
    assert m.argmin_minus == pytest.approx(-0.75, abs=1e-12)
    m = half_line_minima(Poly.from_abcd(1, 0, -2, 0))
    assert m.m_minus == pytest.approx(-1) and m.m_plus == pytest.approx(-1)
    assert (m.argmin_minus, m.argmin_plus) == pytest.approx((-1.0, 1.0), abs=1e-12)


def test_half_line_minima_rejects_odd_or_negative_leading():
    with pytest.raises(InvalidParameters):
        half_line_minima(Poly((0, 0, 1)))
    with pytest.raises(InvalidParameters):
        half_line_minima(Poly((0, 0, 0, -1)))


def test_outer_branches_examples():
    ob = outer_branches(Poly.from_abcd(1, 0, 0, 0), 16.0)
    assert (ob.b_of_y, ob.a_of_y) == pytest.approx((-2.0, 2.0), abs=1e-12)
    f = Poly.from_abcd(1, 1, 0, 0)
    s6 = outer_branches(f, 1e6)
    s8 = outer_branches(f, 1e8)
    assert abs(s6.a_of_y + s6.b_of_y + 0.5) <= 0.05
    assert abs(s8.a_of_y + s8.b_of_y + 0.5) < abs(s6.a_of_y + s6.b_of_y + 0.5)
    with pytest.raises(NoOuterBranch):
        outer_branches(f, -0.2)


@settings(max_examples=40, deadline=None)
@given(
    st.floats(0.1, 5).map(lambda v: round(v, 2)),
    st.floats(-3, 3).map(lambda v: round(v, 2)),
    st.floats(-3, 3).map(lambda v: round(v, 2)),
    st.floats(-3, 3).map(lambda v: round(v, 2)),
    st.floats(0.5, 8),
)
def test_outer_branch_residual(a, b, c, d, log_y):
    f = Poly.from_abcd(a, b, c, d)
    mins = half_line_minima(f)
    y = max(mins.m_minus, mins.m_plus) + 10 ** log_y
    ob = outer_branches(f, y)
    assert ob.b_of_y < ob.a_of_y
    for x in (ob.a_of_y, ob.b_of_y):
        assert abs(f(x) - y) <= 1e-9 * max(1.0, abs(y))


@pytest.mark.parametrize("a,b", [(1, 1), (2, -1), (1, 3)])
def test_branch_sum_converges_monotonically(a, b):
    f = Poly.from_abcd(a, b, 0.5, -1)
    dist = []
    for y in (1e4, 1e6, 1e8):
        ob = outer_branches(f, y)
        dist.append(abs(ob.a_of_y + ob.b_of_y + b / (2 * a)))
    assert dist[0] > dist[1] > dist[2]
    assert math.isfinite(dist[2])
