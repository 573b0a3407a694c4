from fractions import Fraction

import pytest

from diracens.criticality import family
from diracens.dirac import single_trace
from diracens.errors import CoverageError
from diracens.loop_equations import CorrelatorTable, sde_residual, sde_sweep
from diracens.recursion import correlator_table
from diracens.spectral import solve_one_cut


@pytest.mark.parametrize("name,c", [("quartic", dict(t2=1, t4=0.05)),
                                    ("cubic", dict(t2=1, t3=0.1)),
                                    ("single-cubic", dict(t3=-0.15)),
                                    ("hexic", dict(t2=1, t4=-0.02, t6=0.002))])
def test_numeric_tables_certified(name, c):
    sol = solve_one_cut(family(name, **c))
    tab = correlator_table(sol, gmax=1, lmax=8)
    rep = sde_sweep(sol.potential, tab, gmax=1, lmax=8)
    assert rep.passed, rep.to_json()


def test_formal_table_exact():
    p = family("quartic", t2=1, t4=1)
    sol = solve_one_cut(p, mode="formal", order=3)
    tab = correlator_table(sol, gmax=1, lmax=8)
    rep = sde_sweep(sol.potential, tab, gmax=1, lmax=8)
    assert rep.exact and rep.max_abs == 0


def test_perturbed_entry_is_caught():
    sol = solve_one_cut(single_trace({4: Fraction(1, 20)}))
    tab = correlator_table(sol, gmax=1, lmax=6)
    key = (0, (4,))
    tab.entries[key] = tab.entries[key] * (1 + 1e-6)
    assert not sde_sweep(sol.potential, tab, gmax=1, lmax=6).passed


def test_missing_entry_raises():
    with pytest.raises(CoverageError):
        sde_residual(single_trace({4: Fraction(1)}), CorrelatorTable({(0, (2,)): 1}), 0, 3)


def test_table_json_roundtrip():
    sol = solve_one_cut(single_trace({4: Fraction(1)}), mode="formal", order=2)
    tab = correlator_table(sol, lmax=4)
    back = CorrelatorTable.from_json(tab.to_json())
    assert back.entries == tab.entries
