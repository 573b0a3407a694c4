from fractions import Fraction

import pytest

from diracens.criticality import family
from diracens.dirac import single_trace
from diracens.errors import ContinuationError, ConvergenceError, NegativeDensityError
from diracens.spectral import (SpectralSolution, density, resolvent, solve_numeric,
                               solve_one_cut, zhukovsky, zhukovsky_inverse)


def test_zhukovsky_roundtrip():
    sol = solve_numeric(family("single-cubic", t3=-0.1))
    m = sol.map
    for x in (5.0, -4.0 + 0.5j, 0.3 + 2j):
        z = zhukovsky_inverse(m, x)
        assert abs(z) > 1
        assert abs(zhukovsky(m, z) - x) < 1e-12


def test_gamma_identity_quartic():
    for t2, t4 in [(1, 0.05), (2, -0.05), (0.7, 0.2)]:
        g2 = solve_numeric(family("quartic", t2=t2, t4=t4)).q
        assert abs(3 * t4 ** 2 * g2 ** 4 + 6 * t4 * g2 ** 2 + t2 * g2 - 1) < 1e-12


def test_density_normalized_and_moments(quartic_sol):
    d = density(quartic_sol)
    assert d.total_mass() == pytest.approx(1, abs=1e-10)
    m = quartic_sol.moments(4)
    assert d.moment(2) == pytest.approx(float(m[2]), abs=1e-10)
    assert d.cdf(d.support[1]) == pytest.approx(1, abs=1e-10)
    assert d.cdf(0.0) == pytest.approx(0.5, abs=1e-10)


def test_resolvent_asymptotics(quartic_sol):
    x = 200.0
    m = quartic_sol.moments(2)
    w = resolvent(quartic_sol, x)
    assert abs(w - (1 / x + float(m[2]) / x ** 3)) < 1e-8


def test_asymmetric_cubic_moments_sum_rule():
    sol = solve_numeric(family("single-cubic", t3=-0.15))
    d = density(sol)
    assert d.moment(1) == pytest.approx(float(sol.moments(1)[1]), abs=1e-10)
    assert sol.alpha != 0


def test_formal_gaussian_moments():
    sol = solve_one_cut(single_trace({}), mode="formal", order=2)
    m = sol.moments(6)
    assert [m[k][0] for k in (2, 4, 6)] == [1, 2, 5]
    assert all(c == 0 for k in (2, 4, 6) for c in m[k].coeffs[1:])


def test_formal_quartic_series():
    sol = solve_one_cut(single_trace({4: Fraction(1)}), mode="formal", order=3)
    assert list(sol.moments(2)[2].coeffs) == [1, -2, 9, -54]


def test_past_critical_is_flagged():
    sol = solve_numeric(family("quartic", t2=1, t4=-0.05))
    with pytest.raises(NegativeDensityError):
        density(sol)
    assert density(sol, allow_negative=True).min_factor() < 0


def test_continuation_stops_at_fold():
    with pytest.raises((ContinuationError, ConvergenceError)):
        solve_numeric(family("single-quartic", t4=-0.1))


def test_solution_dict_roundtrip(quartic_sol):
    back = SpectralSolution.from_dict(quartic_sol.to_dict())
    assert back.q == pytest.approx(quartic_sol.q, abs=0)
    assert float(back.moments(4)[4]) == pytest.approx(float(quartic_sol.moments(4)[4]), rel=1e-14)
