import numpy as np
import pytest

from diracens import _kernels
from diracens._accel import HAS_NUMBA
from diracens.criticality import family
from diracens.dirac import single_trace
from diracens.errors import ConfigError, DivergentActionError
from diracens.montecarlo import (MCRun, action_arrays, batch_means, compare_density,
                                 dirac_traces, metropolis_sample, region_label)
from diracens.spectral import density, solve_numeric

SMALL = dict(N=12, sweeps=3000, burn_in=300, chains=2, eig_every=20)


@pytest.fixture(scope="module")
def quartic_run():
    p = family("quartic", t2=1, t4=0.05)
    return p, metropolis_sample(p, MCRun(seed=11, **SMALL))


def test_reproducible(quartic_run):
    p, a = quartic_run
    b = metropolis_sample(p, MCRun(seed=11, **SMALL))
    assert a.moments == b.moments
    c = metropolis_sample(p, MCRun(seed=12, **SMALL))
    assert a.moments != c.moments


def test_identity_and_acceptance(quartic_run):
    _, r = quartic_run
    assert r.identity_max_rel < 1e-12
    assert 0.3 <= r.acceptance <= 0.6


def test_matches_solver_loosely(quartic_run):
    p, r = quartic_run
    sol = solve_numeric(p)
    rep = compare_density(r, density(sol), ks_threshold=0.05)
    assert rep.passed, rep.to_json()


def test_wrong_gamma_is_detected(quartic_run):
    p, r = quartic_run
    sol = solve_numeric(p)
    off = solve_numeric(family("quartic", t2=1 / 1.1 ** 2, t4=0.05 / 1.1 ** 4))
    good = compare_density(r, density(sol))
    bad = compare_density(r, density(off))
    assert bad.ks > 2 * good.ks and not bad.passed


def test_divergent_action_reports_region():
    p = single_trace({4: -0.5}, gaussian=-1)
    assert region_label(p) == "neither"
    with pytest.raises(DivergentActionError, match="neither"):
        metropolis_sample(p, MCRun(N=6, sweeps=4000, burn_in=100, chains=1))


def test_config_validation():
    with pytest.raises(ConfigError):
        MCRun(N=0)
    with pytest.raises(ConfigError):
        MCRun(target_acceptance=0.9)


def test_dirac_traces_binomial():
    lam = np.array([0.3, -1.2, 2.0])
    ps = [3.0] + [np.sum(lam ** k) for k in range(1, 5)]
    mu = (lam[:, None] + lam[None, :]).ravel()
    assert dirac_traces(ps, 4)[4] == pytest.approx(np.sum(mu ** 4))


def test_batch_means():
    x = np.ones(100)
    assert batch_means(x) == (1.0, 0.0)


@pytest.mark.skipif(not HAS_NUMBA, reason="numba unavailable")
def test_backends_agree():
    p = family("quartic", t2=1, t4=0.05)
    K, a, b = action_arrays(p, 6)
    out = [_kernels.metropolis_chain(np.zeros((6, 6)), a, b, K, 60, 20, 0.4, 0.28, 1, 10, 5,
                                     backend=be) for be in ("numba", "numpy")]
    np.testing.assert_allclose(out[0][0], out[1][0], rtol=1e-9, atol=1e-9)
    assert out[0][2] == out[1][2]


@pytest.mark.skipif(not HAS_NUMBA, reason="numba unavailable")
def test_pairing_backends_agree():
    for ks in ([4, 4], [3, 3, 2], [6, 2]):
        assert list(_kernels.pairing_face_histogram(ks, backend="numba")) == \
            list(_kernels.pairing_face_histogram(ks, backend="numpy"))
