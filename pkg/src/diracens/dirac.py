"""Type (1,0) Dirac potentials and their bi-tracial matrix-model form.

For D = H (x) 1 + 1 (x) H the eigenvalues are lambda_i + lambda_j, so

    tr D^l = sum_k C(l, k) tr H^(l-k) tr H^k,      tr H^0 = N.

A Dirac potential sum_l c_l tr D^l therefore becomes a bi-tracial action

    S(H) = (N/t) (g/2) tr H^2 + sum_i (N/t) (t_i/i) tr H^i
           + sum_{(i,j) ordered} t_ij/(i+j) tr H^i tr H^j.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from .series import Series, _scalar_json, is_exact

__all__ = [
    "DiracPotential", "BitracialPotential", "dirac_trace_expand",
    "potential_to_bitracial", "action_value", "dirac_action_direct",
    "quartic", "cubic", "hexic", "single_trace", "power_sums",
]


def _num(c):
    """Exact-friendly scaling: keep Fractions exact, leave floats alone."""
    return Fraction(c) if isinstance(c, int) and not isinstance(c, bool) else c


def _parse_scalar(v):
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, dict) and "series" in v:
        return Series([_parse_scalar(c) for c in v["series"]], v["order"], v["variable"])
    return v


@dataclass(frozen=True)
class DiracPotential:
    """S(D) = sum_l c_l tr D^l for a type (1,0) spectral triple."""

    terms: tuple
    signature: str = "(1,0)"
    name: str = "custom"

    def __post_init__(self):
        terms = tuple((int(l), c) for l, c in self.terms)
        if not terms:
            raise ValueError("a Dirac potential needs at least one term")
        powers = [l for l, _ in terms]
        if len(set(powers)) != len(powers):
            raise ValueError("powers must be distinct")
        if any(l < 1 for l in powers):
            raise ValueError("powers must be positive")
        object.__setattr__(self, "terms", tuple(sorted(terms)))

    @property
    def degree(self):
        return max(l for l, _ in self.terms)

    def coupling(self, l):
        return dict(self.terms).get(l, 0)

    def __add__(self, other):
        d = dict(self.terms)
        for l, c in other.terms:
            d[l] = d.get(l, 0) + c
        return DiracPotential(tuple(d.items()))

    def __mul__(self, s):
        return DiracPotential(tuple((l, c * s) for l, c in self.terms), name=self.name)

    __rmul__ = __mul__


def quartic(t2, t4):
    return DiracPotential(((2, _num(t2) / 4), (4, _num(t4) / 8)), name="quartic")


def cubic(t2, t3):
    return DiracPotential(((2, _num(t2) / 4), (3, _num(t3) / 6)), name="cubic")


def hexic(t2, t4, t6):
    return DiracPotential(((2, _num(t2) / 4), (4, _num(t4) / 8), (6, _num(t6) / 12)),
                          name="hexic")


def dirac_trace_expand(l):
    """tr D^l as [(k, l-k, C(l,k))]: weight * tr H^k * tr H^(l-k)."""
    if l < 1:
        raise ValueError("l must be positive")
    return [(k, l - k, comb(l, k)) for k in range(l + 1)]


@dataclass(frozen=True)
class BitracialPotential:
    gaussian_coeff: object = 1
    single_trace: dict = field(default_factory=dict)
    bi_trace: dict = field(default_factory=dict)
    hooft_t: object = 1

    def __post_init__(self):
        st = {int(i): c for i, c in self.single_trace.items() if not _zero(c)}
        if 2 in st:
            raise ValueError("fold the quadratic single-trace term into gaussian_coeff")
        bt = {}
        for (i, j), c in self.bi_trace.items():
            i, j = int(i), int(j)
            if i < 1 or j < 1:
                raise ValueError("bi-trace powers must be positive")
            key = (min(i, j), max(i, j))
            if key in bt and bt[key] != c:
                raise ValueError(f"bi_trace not symmetric at {key}")
            if not _zero(c):
                bt[key] = c
        object.__setattr__(self, "single_trace", st)
        object.__setattr__(self, "bi_trace", bt)

    def t_ij(self, i, j):
        return self.bi_trace.get((min(i, j), max(i, j)), 0)

    @property
    def degree(self):
        d = 2 if not _zero(self.gaussian_coeff) else 0
        d = max([d] + list(self.single_trace) + [i + j for i, j in self.bi_trace])
        return d

    @property
    def bi_indices(self):
        """Sorted set of trace powers that appear in bi-trace terms."""
        s = set()
        for i, j in self.bi_trace:
            s.update((i, j))
        return tuple(sorted(s))

    def is_even(self):
        return (all(i % 2 == 0 for i in self.single_trace)
                and all((i + j) % 2 == 0 for i, j in self.bi_trace))

    def is_single_trace(self):
        return not self.bi_trace

    def ordered_pairs(self):
        """Yield (i, j, t_ij) over ordered pairs, mirrors included."""
        for (i, j), c in self.bi_trace.items():
            yield i, j, c
            if i != j:
                yield j, i, c

    def b_matrix(self):
        """B_ij = 2 t_ij/(i+j) on bi_indices, as a dict keyed by (i, j)."""
        out = {}
        for i, j, c in self.ordered_pairs():
            out[(i, j)] = c * Fraction(2, i + j) if _exactish(c) else c * (2.0 / (i + j))
        return out

    def scaled(self, s, keep_gaussian=True):
        """Scale all non-Gaussian couplings by ``s``; (1,1) counts as Gaussian."""
        st = {i: c * s for i, c in self.single_trace.items()}
        bt = {k: (c if (keep_gaussian and k == (1, 1)) else c * s)
              for k, c in self.bi_trace.items()}
        return BitracialPotential(self.gaussian_coeff, st, bt, self.hooft_t)

    def gaussian_part(self):
        bt = {(1, 1): self.bi_trace[(1, 1)]} if (1, 1) in self.bi_trace else {}
        return BitracialPotential(self.gaussian_coeff, {}, bt, self.hooft_t)

    def blend(self, other, s):
        """(1-s)*self + s*other, coefficientwise."""
        def mix(a, b):
            return a * (1 - s) + b * s
        st = {i: mix(self.single_trace.get(i, 0), other.single_trace.get(i, 0))
              for i in set(self.single_trace) | set(other.single_trace)}
        bt = {k: mix(self.bi_trace.get(k, 0), other.bi_trace.get(k, 0))
              for k in set(self.bi_trace) | set(other.bi_trace)}
        return BitracialPotential(mix(self.gaussian_coeff, other.gaussian_coeff),
                                  st, bt, self.hooft_t)

    def map_coeffs(self, fn):
        return BitracialPotential(fn(self.gaussian_coeff),
                                  {i: fn(c) for i, c in self.single_trace.items()},
                                  {k: fn(c) for k, c in self.bi_trace.items()},
                                  self.hooft_t)

    def to_float(self):
        return self.map_coeffs(float)

    def to_dict(self):
        return {
            "hooft_t": _scalar_json(self.hooft_t),
            "gaussian_coeff": _scalar_json(self.gaussian_coeff),
            "single_trace": {str(i): _scalar_json(c) for i, c in sorted(self.single_trace.items())},
            "bi_trace": [[i, j, _scalar_json(c)] for (i, j), c in sorted(self.bi_trace.items())],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(_parse_scalar(d["gaussian_coeff"]),
                   {int(i): _parse_scalar(c) for i, c in d["single_trace"].items()},
                   {(int(i), int(j)): _parse_scalar(c) for i, j, c in d["bi_trace"]},
                   _parse_scalar(d["hooft_t"]))


def _zero(c):
    if isinstance(c, Series):
        return all(x == 0 for x in c.coeffs)
    return c == 0


def _exactish(c):
    return is_exact(c) or (isinstance(c, Series) and c.exact)


def single_trace(couplings, gaussian=1, hooft_t=1):
    """exp(-(N/t)[g/2 tr H^2 + sum_k c_k/k tr H^k]); ``couplings`` maps k -> c_k."""
    return BitracialPotential(gaussian, dict(couplings), {}, hooft_t)


def potential_to_bitracial(p, hooft_t=1):
    """Expand sum_l c_l tr D^l into the bi-tracial normal form."""
    gauss = 0
    st, bt = {}, {}
    for l, c in p.terms:
        c = _num(c)
        # tr H^l tr H^0 + tr H^0 tr H^l = 2N tr H^l
        if l == 2:
            gauss = gauss + 4 * c * hooft_t
        elif l >= 1:
            st[l] = st.get(l, 0) + 2 * l * c * hooft_t
        for k in range(1, l):
            key = (min(k, l - k), max(k, l - k))
            bt[key] = l * c * comb(l, k)
    return BitracialPotential(gauss, st, bt, hooft_t)


def power_sums(eigenvalues, kmax):
    lam = np.asarray(eigenvalues)
    return [float(np.sum(lam ** k)) if k else float(len(lam)) for k in range(kmax + 1)]


def action_value(p, eigenvalues, N=None):
    """S(H) evaluated from the eigenvalues of H via power sums."""
    lam = np.asarray(eigenvalues, dtype=float)
    N = len(lam) if N is None else N
    if len(lam) != N:
        raise ValueError("eigenvalue count must equal N")
    ps = power_sums(lam, max(p.degree, 2))
    t = float(p.hooft_t)
    s = (N / t) * float(p.gaussian_coeff) / 2 * ps[2]
    for i, c in p.single_trace.items():
        s += (N / t) * float(c) / i * ps[i]
    for (i, j), c in p.bi_trace.items():
        mult = 1 if i == j else 2
        s += mult * float(c) / (i + j) * ps[i] * ps[j]
    return s


def dirac_action_direct(p, eigenvalues):
    """tr S(D) from the N^2 Dirac eigenvalues lambda_i + lambda_j."""
    lam = np.asarray(eigenvalues, dtype=float)
    mu = (lam[:, None] + lam[None, :]).ravel()
    return sum(float(c) * float(np.sum(mu ** l)) for l, c in p.terms)
