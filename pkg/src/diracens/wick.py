"""Exact Wick oracle for formal bi-tracial integrals (t = 1).

Gaussian reference: (N g/2) tr H^2 + (t_11/2)(tr H)^2. Writing H = X + tau*1
with X a GUE matrix of variance 1/(N g) and tau an independent (formal)
Gaussian scalar of variance kappa = -t_11/(g (g + t_11) N^2) reproduces the
full covariance, so every expectation reduces to GUE multi-trace moments.
Those are computed by enumerating labelled pairings and counting the faces
of gamma∘pi (``_kernels.pairing_face_histogram``); the GUE loop recursion is
kept as an independent second engine.

All other couplings are perturbations, expanded to order ``v`` in a
bookkeeping parameter eps that multiplies them. Results are Laurent
polynomials in N with Fraction coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

from ._kernels import pairing_face_histogram
from .errors import DegreeGuardError, ConfigError
from .series import LaurentPoly

__all__ = ["WickQuery", "WickResult", "gue_expectation", "gaussian_expectation",
           "wick_series", "wick_coefficient", "free_energy_wick", "PAIRING_DEGREE_GUARD",
           "RECURSION_DEGREE_GUARD"]

# (2k-1)!! pairings: degree 16 is ~2e6 pairings (well under a second in
# numba); degree 18 would be ~3.4e7.
PAIRING_DEGREE_GUARD = 16
RECURSION_DEGREE_GUARD = 40


def _lp(d=None):
    return LaurentPoly(d or {}, "N")


def _clean(lp):
    return _lp({k: c for k, c in lp.terms.items() if c != 0})


def _frac(c):
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    raise ConfigError(f"the Wick oracle needs exact couplings, got {c!r}")


@lru_cache(maxsize=None)
def _gue_pairings(ks, g):
    """<prod tr X^k> for X GUE with <X_ij X_kl> = delta_il delta_jk / (N g)."""
    D = sum(ks)
    if D % 2:
        return _lp()
    if D == 0:
        return _lp({0: Fraction(1)})
    if D > PAIRING_DEGREE_GUARD:
        raise DegreeGuardError(f"total degree {D} exceeds the pairing guard "
                               f"{PAIRING_DEGREE_GUARD}; use method='recursion'")
    hist = pairing_face_histogram(list(ks))
    w = Fraction(1) / g ** (D // 2)
    return _lp({f - D // 2: int(h) * w for f, h in enumerate(hist) if h})


@lru_cache(maxsize=None)
def _gue_recursion(ks, g):
    """Same quantity via the Gaussian loop equations (Tutte recursion)."""
    ks = tuple(sorted(k for k in ks))
    if any(k == 0 for k in ks):
        nz = tuple(k for k in ks if k)
        return _gue_recursion(nz, g) * _lp({len(ks) - len(nz): Fraction(1)})
    D = sum(ks)
    if D % 2:
        return _lp()
    if D == 0:
        return _lp({0: Fraction(1)})
    if D > RECURSION_DEGREE_GUARD:
        raise DegreeGuardError(f"total degree {D} exceeds {RECURSION_DEGREE_GUARD}")
    l1, rest = ks[-1], ks[:-1]
    acc = _lp()
    for k in range(l1 - 1):
        acc = acc + _gue_recursion(tuple(sorted(rest + (k, l1 - 2 - k))), g)
    for r, lr in enumerate(rest):
        others = rest[:r] + rest[r + 1:]
        acc = acc + lr * _gue_recursion(tuple(sorted(others + (l1 + lr - 2,))), g)
    return _clean(acc * _lp({-1: Fraction(1) / g}))


def gue_expectation(lengths, g=1, method="pairings"):
    """<prod_i tr X^{l_i}> for GUE X with action (N g/2) tr X^2, as a Laurent poly in N."""
    g = _frac(g)
    ks = tuple(sorted(int(l) for l in lengths))
    if method == "recursion":
        return _gue_recursion(ks, g)
    if method != "pairings":
        raise ConfigError(f"unknown method {method!r}")
    nz = tuple(k for k in ks if k)
    out = _gue_pairings(nz, g)
    return out * _lp({len(ks) - len(nz): Fraction(1)}) if len(nz) != len(ks) else out


def _double_factorial(n):
    r = 1
    while n > 1:
        r *= n
        n -= 2
    return r


@dataclass(frozen=True)
class _Gaussian:
    g: Fraction
    kappa: Fraction      # tau variance times N^2
    method: str

    @classmethod
    def of(cls, p, method):
        g = _frac(p.gaussian_coeff)
        if g <= 0:
            raise ConfigError("the Wick oracle needs a positive Gaussian coefficient")
        b = _frac(p.t_ij(1, 1))
        if g + b == 0:
            raise ConfigError("degenerate trace mode: g + t_11 = 0")
        return cls(g, -b / (g * (g + b)), method)


def _expand_shift(lengths):
    """prod tr (X + tau)^l as {(x-lengths, tau power): integer weight}."""
    terms = {((), 0): 1}
    for l in lengths:
        new = {}
        for (xs, m), w in terms.items():
            for k in range(l + 1):
                key = (tuple(sorted(xs + (k,))), m + l - k)
                new[key] = new.get(key, 0) + w * comb(l, k)
        terms = new
    return terms


_gauss_cache = {}


def gaussian_expectation(lengths, gauss):
    """<prod tr H^{l_i}> under the full Gaussian reference measure."""
    key = (tuple(sorted(lengths)), gauss)
    if key in _gauss_cache:
        return _gauss_cache[key]
    out = _lp()
    if gauss.kappa == 0:
        out = gue_expectation(key[0], gauss.g, gauss.method)
    else:
        for (xs, m), w in _expand_shift(key[0]).items():
            if m % 2:
                continue
            tau = _lp({-m: _double_factorial(m - 1) * gauss.kappa ** (m // 2)})
            out = out + gue_expectation(xs, gauss.g, gauss.method) * tau * w
    out = _clean(out)
    _gauss_cache[key] = out
    return out


def _interaction(p):
    """S_int = sum_i N (t_i/i) tr H^i + sum_ordered t_ij/(i+j) tr H^i tr H^j, minus (1,1)."""
    if p.hooft_t != 1:
        raise ConfigError("the Wick oracle works at hooft_t = 1")
    S = {}
    for i, c in p.single_trace.items():
        S[(i,)] = S.get((i,), _lp()) + _lp({1: _frac(c) / i})
    for (i, j), c in p.bi_trace.items():
        if (i, j) == (1, 1):
            continue
        mult = 1 if i == j else 2
        key = (i, j)
        S[key] = S.get(key, _lp()) + _lp({0: mult * _frac(c) / (i + j)})
    return S


def _mono_mul(A, B):
    out = {}
    for ka, ca in A.items():
        for kb, cb in B.items():
            k = tuple(sorted(ka + kb))
            out[k] = out[k] + ca * cb if k in out else ca * cb
    return out


def _powers(S, order):
    """[(-S)^v / v!] for v = 0..order, as monomial dicts."""
    P = [{(): _lp({0: Fraction(1)})}]
    negS = {k: -c for k, c in S.items()}
    for v in range(1, order + 1):
        nxt = _mono_mul(P[-1], negS)
        P.append({k: c * Fraction(1, v) for k, c in nxt.items()})
    return P


def _raw_moments(lengths, P, gauss):
    """Unnormalized <prod tr H^l (-S)^v/v!>_0 for each v."""
    out = []
    for Pv in P:
        acc = _lp()
        for mono, c in Pv.items():
            acc = acc + c * gaussian_expectation(tuple(lengths) + mono, gauss)
        out.append(_clean(acc))
    return out


def _ser_mul(a, b, order):
    out = [_lp() for _ in range(order + 1)]
    for i, ai in enumerate(a):
        for j in range(order + 1 - i):
            if j < len(b):
                out[i + j] = out[i + j] + ai * b[j]
    return [_clean(x) for x in out]


def _ser_div(a, z, order):
    """a / z with z_0 = 1."""
    q = []
    for n in range(order + 1):
        s = a[n]
        for k in range(1, n + 1):
            s = s - z[k] * q[n - k]
        q.append(_clean(s))
    return q


def _ser_log(z, order):
    """log z with z_0 = 1."""
    l = [_lp()]
    for n in range(1, order + 1):
        s = z[n] * n
        for k in range(1, n):
            s = s - l[k] * z[n - k] * k
        l.append(_clean(s * Fraction(1, n)))
    return l


def _set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


@dataclass(frozen=True)
class WickQuery:
    observable: tuple            # trace powers (l_1, ..., l_n); () means log Z
    potential: object            # BitracialPotential with exact couplings, t = 1
    order: int                   # eps order v
    connected: bool = True
    method: str = "pairings"

    def __post_init__(self):
        if self.order < 0:
            raise ConfigError("order must be >= 0")


@dataclass
class WickResult:
    laurent: LaurentPoly         # coefficient of eps^v as a Laurent poly in N
    n: int

    def genus(self, g):
        """Coefficient of N^(2-2g-n)."""
        return self.laurent.coeff(2 - 2 * g - self.n)

    @property
    def genus0(self):
        return self.genus(0)

    @property
    def genus1(self):
        return self.genus(1)

    def to_json(self):
        return {"n": self.n,
                "laurent": {str(k): str(c) for k, c in sorted(self.laurent.terms.items())},
                "genus0": str(self.genus0), "genus1": str(self.genus1)}


def wick_series(observable, p, order, connected=True, method="pairings"):
    """[eps^0 .. eps^order] of <prod tr H^l>(_c), each a Laurent poly in N.

    An empty observable gives log Z - log Z_Gaussian.
    """
    gauss = _Gaussian.of(p, method)
    S = _interaction(p)
    P = _powers(S, order)
    Z = _raw_moments((), P, gauss)
    obs = [int(l) for l in observable]
    if not obs:
        return _ser_log(Z, order)
    idx = list(range(len(obs)))
    cache = {}

    def moment(block):
        key = tuple(sorted(obs[i] for i in block))
        if key not in cache:
            cache[key] = _ser_div(_raw_moments(key, P, gauss), Z, order)
        return cache[key]

    if not connected or len(obs) == 1:
        return moment(idx)
    total = [_lp() for _ in range(order + 1)]
    from math import factorial
    for part in _set_partitions(idx):
        k = len(part)
        w = (-1) ** (k - 1) * factorial(k - 1)
        term = moment(part[0])
        for B in part[1:]:
            term = _ser_mul(term, moment(B), order)
        total = [a + b * w for a, b in zip(total, term)]
    return [_clean(x) for x in total]


def wick_coefficient(q: WickQuery) -> WickResult:
    s = wick_series(q.observable, q.potential, q.order, q.connected, q.method)
    n = len(q.observable)
    # log Z = sum N^(2-2g) F_g: treat as n = 0
    return WickResult(s[q.order], n)


def free_energy_wick(p, order, g=0, method="pairings"):
    """[F_g coefficient of eps^v for v = 0..order] as Fractions."""
    s = wick_series((), p, order, method=method)
    return [x.coeff(2 - 2 * g) for x in s]
