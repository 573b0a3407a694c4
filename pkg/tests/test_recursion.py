from fractions import Fraction

import pytest

from diracens.criticality import family
from diracens.dirac import single_trace
from diracens.recursion import (correlator_table, free_energy_series,
                                genus_one_moments, mixed_moment, tr_moments)
from diracens.spectral import solve_one_cut
from diracens.wick import wick_series


def test_gaussian_genus_one():
    sol = solve_one_cut(single_trace({}), mode="formal", order=1)
    assert genus_one_moments(sol, 4)[4][0] == 1


def test_gaussian_cylinders():
    sol = solve_one_cut(single_trace({}), mode="formal", order=1)
    assert mixed_moment(sol, 1, 1)[0] == 1 and mixed_moment(sol, 2, 2)[0] == 2


def test_dirac_quartic_genus_one_matches_oracle():
    p = family("quartic", t2=1, t4=1)
    sol = solve_one_cut(p, mode="formal", order=3)
    t1 = genus_one_moments(sol, 2)[2]
    w = wick_series((2,), p, 3)
    assert list(t1.coeffs) == [x.coeff(-1) for x in w]


def test_blob_resummed_cylinder_matches_oracle():
    p = family("quartic", t2=1, t4=1)
    sol = solve_one_cut(p, mode="formal", order=3)
    w = wick_series((2, 2), p, 3)
    assert list(mixed_moment(sol, 2, 2).coeffs) == [x.coeff(0) for x in w]


def test_tr_agrees_with_loop_equations_single_trace():
    sol = solve_one_cut(single_trace({4: 0.05}))
    t1 = genus_one_moments(sol, 6)
    tr = tr_moments(sol, 1, 1, 6)
    for l in (2, 4, 6):
        assert tr[(l,)] == pytest.approx(float(t1[l]), rel=1e-9)


def test_genus_one_free_energy():
    p = single_trace({4: Fraction(1)})
    assert list(free_energy_series(p, g=1, order=3).coeffs) == [0, Fraction(-1, 4),
                                                                Fraction(15, 8),
                                                                Fraction(-33, 2)]
    q = family("quartic", t2=1, t4=1)
    assert list(free_energy_series(q, g=1, order=3).coeffs) == [0, Fraction(-7, 4),
                                                                Fraction(201, 8),
                                                                Fraction(-1635, 4)]


def test_three_point_only_for_single_trace():
    from diracens.errors import ConfigError
    sol = solve_one_cut(family("quartic", t2=1, t4=0.05))
    with pytest.raises(ConfigError):
        correlator_table(sol, nmax=3)
