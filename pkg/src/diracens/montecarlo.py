"""Finite-N Metropolis sampler for bi-tracial ensembles.

Single-entry proposals (diagonal, then real and imaginary parts of each
off-diagonal entry) with O(N) incremental updates of tr H^k; see
``_kernels._metropolis``. Chains are seeded from SeedSequence([seed, chain]).
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict
from math import comb

import numpy as np
from scipy import stats

from . import _kernels
from ._accel import backend as _default_backend
from .errors import DivergentActionError, ConfigError

__all__ = ["MCRun", "MCResult", "metropolis_sample", "compare_density",
           "action_arrays", "region_label", "batch_means", "dirac_traces"]


@dataclass(frozen=True)
class MCRun:
    N: int = 32
    sweeps: int = 200_000
    burn_in: int = 2_000
    step_scale: float = 1.0
    seed: int = 0
    chains: int = 4
    measure_every: int = 1
    eig_every: int = 100
    target_acceptance: float = 0.45
    backend: str | None = None

    def __post_init__(self):
        if self.N < 1 or self.sweeps < 1 or self.chains < 1 or self.burn_in < 0:
            raise ConfigError("N, sweeps, chains must be positive and burn_in >= 0")
        if not 0.3 <= self.target_acceptance <= 0.6:
            raise ConfigError("target acceptance must lie in [0.3, 0.6]")


@dataclass
class MCResult:
    run: MCRun
    hooft_t: float
    moments: dict          # k -> (mean, se) of (t/N) tr H^k
    dirac_moments: dict    # l -> (mean, se) of (t/N^2) tr D^l
    chain_moments: list    # per chain: k -> mean
    eigenvalues: np.ndarray
    acceptance: float
    identity_max_rel: float
    step_sizes: list = field(default_factory=list)

    def dirac_eigenvalues(self, max_snapshots=200):
        ev = self.eigenvalues
        if len(ev) > max_snapshots:
            ev = ev[np.linspace(0, len(ev) - 1, max_snapshots).astype(int)]
        return (ev[:, :, None] + ev[:, None, :]).reshape(len(ev), -1)

    def histogram(self, bins=60, dirac=False):
        v = (self.dirac_eigenvalues() if dirac else self.eigenvalues).ravel()
        if v.size == 0:
            raise ValueError("empty histogram")
        h, e = np.histogram(v, bins=bins, density=True)
        return e, h

    def to_json(self):
        return {
            "run": asdict(self.run),
            "hooft_t": self.hooft_t,
            "moments": {str(k): {"mean": m, "se": s} for k, (m, s) in self.moments.items()},
            "dirac_moments": {str(k): {"mean": m, "se": s}
                              for k, (m, s) in self.dirac_moments.items()},
            "chain_moments": [{str(k): v for k, v in c.items()} for c in self.chain_moments],
            "acceptance": self.acceptance,
            "identity_max_rel": self.identity_max_rel,
            "eigen_snapshots": int(len(self.eigenvalues)),
            "step_sizes": self.step_sizes,
        }


def action_arrays(p, N):
    """Coefficient arrays a[k] (of p_k) and b[i, j] (of p_i p_j, ordered pairs)."""
    K = max(p.degree, 2)
    t = float(p.hooft_t)
    a = np.zeros(K + 1)
    b = np.zeros((K + 1, K + 1))
    a[2] = N / t * float(p.gaussian_coeff) / 2
    for i, c in p.single_trace.items():
        a[i] += N / t * float(c) / i
    for i, j, c in p.ordered_pairs():
        b[i, j] = float(c) / (i + j) if i != j else float(c) / (2 * i)
    return K, a, b


def region_label(p):
    """Quadrant of the (Gaussian, leading) coupling signs: formal / convergent / both / neither."""
    K, a, b = action_arrays(p, 1)
    formal = float(p.gaussian_coeff) > 0
    lead = a[K] + sum(b[i, K - i] for i in range(1, K))
    convergent = K % 2 == 0 and lead > 0
    if formal and convergent:
        return "both"
    if formal:
        return "formal"
    if convergent:
        return "convergent"
    return "neither"


def batch_means(x, nbatch=32):
    """Mean and batch-means standard error of a correlated series."""
    x = np.asarray(x, float)
    nb = min(nbatch, len(x))
    if nb < 2:
        return float(np.mean(x)), float("nan")
    m = len(x) // nb
    bm = x[: m * nb].reshape(nb, m).mean(axis=1)
    return float(np.mean(x)), float(np.std(bm, ddof=1) / np.sqrt(nb))


def dirac_traces(ps, lmax):
    """tr D^l from power sums p_0..p_lmax of H (p_0 = N)."""
    ps = np.asarray(ps, float)
    return np.array([sum(comb(l, k) * ps[..., k] * ps[..., l - k] for k in range(l + 1))
                     for l in range(lmax + 1)])


def _chain_seed(seed, chain):
    return int(np.random.SeedSequence([int(seed) & (2 ** 64 - 1), chain])
               .generate_state(1, dtype=np.uint32)[0])


def metropolis_sample(p, run: MCRun):
    N = run.N
    K, a, b = action_arrays(p, N)
    t = float(p.hooft_t)
    nmeas = max(K, 4)
    step_d = run.step_scale * np.sqrt(t / N)
    step_o = step_d / np.sqrt(2)
    be = run.backend or _default_backend()

    per_chain, eigs_all, acc, steps = [], [], [], []
    for c in range(run.chains):
        meas, eigs, rate, sd, so, _ = _kernels.metropolis_chain(
            np.zeros((N, N)), a, b, K, run.sweeps, run.burn_in, step_d, step_o,
            run.measure_every, run.eig_every, _chain_seed(run.seed, c),
            target=run.target_acceptance, nmeas_pow=nmeas, backend=be)
        if rate < 0:
            raise DivergentActionError(
                f"chain {c} ran away (tr H^2 > 1e8 N); couplings sit in the "
                f"'{region_label(p)}' region, where the action is not bounded below"
                + (" ('neither formal nor convergent' quadrant)" if region_label(p) == "neither" else ""))
        per_chain.append(meas)
        eigs_all.append(eigs)
        acc.append(rate)
        steps.append((sd, so))

    moments, dirac, chain_means = {}, {}, [dict() for _ in per_chain]
    for k in range(1, nmeas + 1):
        ms, ses = [], []
        for ci, meas in enumerate(per_chain):
            m, s = batch_means(meas[:, k] * t / N)
            ms.append(m)
            ses.append(s)
            chain_means[ci][k] = m
        moments[k] = (float(np.mean(ms)), float(np.sqrt(np.sum(np.square(ses)))) / len(ms))
    for l in range(1, nmeas + 1):
        ms, ses = [], []
        for meas in per_chain:
            d = dirac_traces(meas, l)[l] * t / N ** 2
            m, s = batch_means(d)
            ms.append(m)
            ses.append(s)
        dirac[l] = (float(np.mean(ms)), float(np.sqrt(np.sum(np.square(ses)))) / len(ms))

    eigs = np.concatenate(eigs_all, axis=0)
    # per-snapshot identity: spectrum of H (x) 1 + 1 (x) H vs binomial expansion
    worst = 0.0
    for lam in eigs:
        mu = (lam[:, None] + lam[None, :]).ravel()
        ps = [float(N)] + [float(np.sum(lam ** k)) for k in range(1, nmeas + 1)]
        ex = dirac_traces(ps, nmeas)
        for l in range(1, nmeas + 1):
            direct = float(np.sum(mu ** l))
            scale = float(np.sum(np.abs(mu) ** l)) or 1.0
            worst = max(worst, abs(direct - ex[l]) / scale)
    return MCResult(run, t, moments, dirac, chain_means, eigs, float(np.mean(acc)),
                    worst, [list(s) for s in steps])


@dataclass
class DensityReport:
    ks: float
    z_scores: dict
    ks_threshold: float
    z_threshold: float
    rho_at_center: float
    center_fraction: float

    @property
    def passed(self):
        return self.ks < self.ks_threshold and all(abs(z) <= self.z_threshold
                                                   for z in self.z_scores.values())

    def to_json(self):
        return {"ks": self.ks, "z_scores": {str(k): v for k, v in self.z_scores.items()},
                "ks_threshold": self.ks_threshold, "z_threshold": self.z_threshold,
                "rho_at_center": self.rho_at_center, "center_fraction": self.center_fraction,
                "passed": self.passed}


def compare_density(result: MCResult, d, ks_threshold=0.03, z_threshold=3.0, lmax=4,
                    allowance=None):
    """KS distance of pooled eigenvalues to ``d`` and z-scores of moments."""
    ev = np.asarray(result.eigenvalues).ravel()
    if ev.size == 0:
        raise ValueError("no eigenvalue snapshots to compare")
    ks = float(stats.kstest(ev, d.cdf).statistic)
    N = result.run.N
    allow = 2.0 / N ** 2 if allowance is None else allowance
    z = {}
    for l in range(1, lmax + 1):
        if l not in result.moments:
            continue
        m, se = result.moments[l]
        diff = abs(m - d.moment(l))
        z[l] = float(max(diff - allow, 0.0) / se) if se > 0 else float("inf")
    b, a = d.support
    c = (a + b) / 2
    w = (a - b) / 20
    frac = float(np.mean(np.abs(ev - c) < w))
    return DensityReport(ks, z, ks_threshold, z_threshold, float(d(c)), frac)
