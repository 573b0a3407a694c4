import math
from fractions import Fraction

import pytest

from diracens.criticality import (edge_exponent, family, find_critical, matching_closed_form,
                                  matching_tuning, minimal_model_label, painleve_series,
                                  quartic_phase_diagram, region_label, singular_exponent,
                                  transition_closed_form)
from diracens.dirac import single_trace
from diracens.errors import ConfigError
from diracens.spectral import solve_numeric


def test_single_quartic_cusp():
    cp = find_critical("single-quartic", ["t4"], start={"t4": -0.07})
    assert cp.couplings["t4"] == pytest.approx(-1 / 12, abs=1e-10)
    assert cp.gamma_c ** 2 == pytest.approx(2, abs=1e-9)
    assert cp.minimal_model == (3, 2)


def test_dirac_critical_line():
    for t4 in (-0.02, -0.06):
        cp = find_critical("quartic", ["t2"], fixed={"t4": t4}, start={"t2": 1.5})
        assert cp.couplings["t2"] == pytest.approx(8 * math.sqrt(-t4 / 3), abs=1e-9)


def test_find_critical_needs_start():
    with pytest.raises(ConfigError):
        find_critical("single-quartic", ["t4"])


def test_edge_exponent_subcritical():
    sol = solve_numeric(family("single-quartic", t4=-0.05))
    assert edge_exponent(sol) == pytest.approx(0.5, abs=0.02)


def test_matching_curve_closed_form_agrees():
    rows = quartic_phase_diagram([-0.05, 0.0, 0.1, 0.7], transition=False, critical=False)
    for r in rows:
        assert r["t2_matching"] == pytest.approx(r["t2_matching_closed_form"], abs=1e-12)


def test_transition_locus():
    rows = quartic_phase_diagram([0.25, 1.0, 4.0], matching=False, critical=False)
    for r in rows:
        assert r["t2_transition"] == pytest.approx(-8 * math.sqrt(r["t4"]), abs=1e-9)
    assert transition_closed_form(1.0) == -8.0


def test_matching_resolvents_agree():
    m = matching_tuning("quartic", {"t4": -0.05})
    assert all(abs(v) < 1e-12 for v in m.residuals.values())
    assert m.couplings["t2"] == pytest.approx(matching_closed_form(-0.05), abs=1e-12)


def test_region_labels():
    assert region_label(1, 1) == "both"
    assert region_label(1, -1) == "formal"
    assert region_label(-1, 1) == "convergent"
    assert region_label(-1, -1) == "neither"


def test_minimal_model_labels():
    assert minimal_model_label("quartic") == (3, 2)
    assert minimal_model_label("single-hexic") == (5, 2)
    assert minimal_model_label(single_trace({8: 1})) == (7, 2)
    with pytest.raises(ConfigError):
        minimal_model_label(single_trace({5: 1}))


def test_painleve_recursion():
    s = painleve_series(8)
    assert s.coefficients[1] == Fraction(-1, 24)
    assert all(r == 0 for r in s.residual())
    bad = painleve_series(3)
    bad.coefficients[2] += Fraction(1, 1000)
    assert any(r != 0 for r in bad.residual())


def test_ratio_analysis_on_known_series():
    # f_n = C(2n, n) 4^-n n^-? : (1 - x)^(-1/2) has theta = -1/2 at t_c = 1
    c = [math.comb(2 * n, n) / 4 ** n for n in range(40)]
    r = singular_exponent(c)
    assert r.t_c == pytest.approx(1, abs=1e-6)
    assert r.exponent == pytest.approx(-0.5, abs=1e-4)


def test_ratio_analysis_terminating_series():
    r = singular_exponent([1, 2, 3] + [0] * 30)
    assert not r.finite_radius


def test_family_rejects_unknown():
    with pytest.raises(ConfigError):
        family("quartic", t2=1, t4=0.1, t9=2)
    with pytest.raises(ConfigError):
        family("octic", t8=1)
