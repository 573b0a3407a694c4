from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diracens.dirac import (BitracialPotential, DiracPotential, action_value,
                            dirac_action_direct, dirac_trace_expand, potential_to_bitracial,
                            quartic, single_trace)


@given(st.lists(st.floats(-2, 2, allow_nan=False), min_size=1, max_size=6),
       st.integers(1, 7))
@settings(max_examples=50, deadline=None)
def test_trace_expansion_matches_spectrum(lam, l):
    lam = np.array(lam)
    direct = np.sum((lam[:, None] + lam[None, :]) ** l)
    ps = [np.sum(lam ** k) for k in range(l + 1)]
    expanded = sum(w * ps[i] * ps[j] for i, j, w in dirac_trace_expand(l))
    assert expanded == pytest.approx(direct, rel=1e-12, abs=1e-9)


def test_quartic_mapping():
    p = potential_to_bitracial(quartic(1, 1))
    assert p.gaussian_coeff == 1
    assert p.single_trace == {4: 1}
    # tr D^4 = 2N tr H^4 + 8 trH trH^3 + 6 (trH^2)^2, times 1/8
    assert p.bi_trace == {(1, 1): 1, (1, 3): 2, (2, 2): 3}


@pytest.mark.parametrize("terms", [((2, 0.25), (4, -0.01)), ((2, 0.3), (3, 0.1), (6, 0.001))])
def test_action_value_equals_dirac_action(terms):
    rng = np.random.default_rng(3)
    lam = rng.normal(size=7)
    d = DiracPotential(terms)
    p = potential_to_bitracial(d)
    assert action_value(p, lam, N=7) == pytest.approx(dirac_action_direct(d, lam), rel=1e-12)


def test_roundtrip_dict():
    p = potential_to_bitracial(quartic(Fraction(4, 3), Fraction(-1, 12)))
    q = BitracialPotential.from_dict(p.to_dict())
    assert q == p


def test_bad_potentials():
    with pytest.raises(ValueError):
        DiracPotential(((2, 1), (2, 3)))
    with pytest.raises(ValueError):
        DiracPotential(())


def test_single_trace_helper():
    p = single_trace({4: Fraction(1, 2)}, gaussian=2)
    assert p.is_single_trace() and p.degree == 4 and p.gaussian_coeff == 2
