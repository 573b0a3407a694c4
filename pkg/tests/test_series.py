from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from diracens.errors import SeriesError
from diracens.series import LaurentPoly, Poly, Series, fraction_solve, poly_real_roots

ORDER = 6
fracs = st.fractions(min_value=-5, max_value=5, max_denominator=7)
series = st.lists(fracs, min_size=ORDER + 1, max_size=ORDER + 1).map(lambda c: Series(c, ORDER))
unit_series = series.map(lambda s: Series([1] + list(s.coeffs[1:]), ORDER))
nilpotent = series.map(lambda s: Series([0] + list(s.coeffs[1:]), ORDER))


@given(series, series, series)
@settings(max_examples=40, deadline=None)
def test_ring_axioms(a, b, c):
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c


@given(unit_series)
@settings(max_examples=40, deadline=None)
def test_inverse_and_division(a):
    one = Series([1], ORDER)
    assert a * a.inverse() == one
    assert (a / a) == one


@given(unit_series)
@settings(max_examples=30, deadline=None)
def test_log_exp_roundtrip(a):
    assert a.log().exp() == a


@given(nilpotent)
@settings(max_examples=30, deadline=None)
def test_exp_log_roundtrip(u):
    assert u.exp().log() == u


@given(unit_series)
@settings(max_examples=30, deadline=None)
def test_sqrt_squares_back(a):
    assert a.sqrt() ** 2 == a


@given(unit_series, st.integers(min_value=-3, max_value=3))
@settings(max_examples=30, deadline=None)
def test_rational_power_consistency(a, k):
    r = Fraction(k, 3)
    assert a.power(r) ** 3 == a ** k


@given(series, nilpotent)
@settings(max_examples=30, deadline=None)
def test_compose_against_horner(f, g):
    manual = Series([0], ORDER)
    for c in reversed(f.coeffs):
        manual = manual * g + c
    assert f.compose(g) == manual


@given(series)
@settings(max_examples=30, deadline=None)
def test_deriv_of_integral(a):
    assert a.integral().deriv() == a


def test_truncation_and_variables():
    x = Series.variable(3)
    assert (x ** 5).coeffs == (0, 0, 0, 0)
    with pytest.raises(SeriesError):
        x + Series.variable(3, var="s")
    with pytest.raises(SeriesError):
        x.inverse()
    with pytest.raises(SeriesError):
        Series([2, 1], 3).power(Fraction(1, 2))   # sqrt(2) is irrational


def test_float_series_mix():
    s = Series([1.0, 0.5], 4)
    assert abs(s.sqrt()[1] - 0.25) < 1e-15
    assert not s.exact


def test_poly_and_laurent():
    x = Poly.x()
    p = (x - 1) * (x + 2) * (x - Fraction(1, 3))
    roots = poly_real_roots(p, (-3, 3))
    assert [round(r, 12) for r in roots] == [-2.0, round(1 / 3, 12), 1.0]
    z = LaurentPoly.monomial(1)
    f = (z + LaurentPoly.monomial(-1)) ** 3
    assert f.residue() == 3 and f.coeff(3) == 1
    assert (f * LaurentPoly.monomial(2)).residue() == 1


def test_double_root_is_found():
    x = Poly.x()
    assert poly_real_roots((x - 1) ** 2 * (x + 1), (-2, 2)) == pytest.approx([-1, 1], abs=1e-9)


def test_fraction_solve_with_series_rhs():
    A = [[2, 1], [1, 3]]
    b = [Series([1, 1], 2), Series([0, 2], 2)]
    x = fraction_solve(A, b)
    assert 2 * x[0] + x[1] == b[0]
    assert x[0] + 3 * x[1] == b[1]
