"""Schwinger-Dyson equations of the bi-tracial model.

Convention: connected expectations expand as

    <prod_i tr H^{l_i}>_c = sum_g (N/t)^{2-2g-n} T^g_{l_1..l_n},

so T^0_0 = t and every other entry with a zero length vanishes.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import CoverageError
from .series import Poly, Series, _scalar_json
from .dirac import _parse_scalar

__all__ = ["CorrelatorTable", "EffectiveDerivative", "fold_effective_derivative",
           "sde_residual", "sde_sweep", "SDEReport"]


@dataclass
class CorrelatorTable:
    entries: dict = field(default_factory=dict)
    hooft_t: object = 1
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.entries = {(int(g), tuple(sorted(int(l) for l in L))): v
                        for (g, L), v in self.entries.items()}

    def set(self, g, lengths, value):
        self.entries[(g, tuple(sorted(lengths)))] = value

    def get(self, g, lengths):
        L = tuple(sorted(lengths))
        if 0 in L:
            if g == 0 and L == (0,):
                return self.hooft_t
            return 0
        if g < 0:
            return 0
        try:
            return self.entries[(g, L)]
        except KeyError:
            raise CoverageError((g, L)) from None

    def __contains__(self, key):
        g, L = key
        L = tuple(sorted(L))
        return 0 in L or (g, L) in self.entries

    @property
    def max_genus(self):
        return max((g for g, _ in self.entries), default=0)

    @property
    def max_boundaries(self):
        return max((len(L) for _, L in self.entries), default=0)

    @property
    def max_length(self):
        return max((max(L) for _, L in self.entries if L), default=0)

    def records(self):
        out = []
        for (g, L) in sorted(self.entries):
            out.append({"g": g, "lengths": list(L),
                        "value": _scalar_json(self.entries[(g, L)])})
        return out

    def to_json(self, **extra):
        d = {"kind": "correlator_table", "hooft_t": _scalar_json(self.hooft_t),
             "meta": self.meta, "records": self.records()}
        d.update(extra)
        return d

    @classmethod
    def from_json(cls, d):
        if isinstance(d, str):
            d = json.loads(d)
        ent = {}
        for r in d["records"]:
            ent[(r["g"], tuple(r["lengths"]))] = _parse_scalar(r["value"])
        return cls(ent, _parse_scalar(d.get("hooft_t", 1)), d.get("meta", {}))


@dataclass(frozen=True)
class EffectiveDerivative:
    """Folded V'(x); tilde_couplings[k] multiplies x^(k-1)."""

    poly: Poly
    tilde_couplings: dict

    @property
    def degree(self):
        return self.poly.degree


def fold_effective_derivative(p, genus0_moments):
    """Mean-field fold of the bi-trace terms into a single-trace V'(x).

    Each ordered pair (i, j) adds 2 i t_ij/(i+j) T_j x^(i-1).
    """
    t = p.hooft_t

    def moment(j):
        if j == 0:
            return t
        try:
            return genus0_moments[j]
        except KeyError:
            raise CoverageError((0, (j,))) from None

    d = p.degree
    c = [0] * max(d, 2)
    c[1] = c[1] + p.gaussian_coeff
    for i, ti in p.single_trace.items():
        c[i - 1] = c[i - 1] + ti
    for i, j, tij in p.ordered_pairs():
        w = tij * Fraction(2 * i, i + j) if _exact(tij) else tij * (2.0 * i / (i + j))
        c[i - 1] = c[i - 1] + w * moment(j)
    tilde = {k + 1: c[k] for k in range(len(c))}
    return EffectiveDerivative(Poly(c), tilde)


def _exact(c):
    return isinstance(c, (int, Fraction)) or (isinstance(c, Series) and c.exact)


def _subsets(L):
    idx = range(len(L))
    for r in range(len(L) + 1):
        for J in itertools.combinations(idx, r):
            Js = set(J)
            yield (tuple(L[i] for i in J), tuple(L[i] for i in idx if i not in Js))


def sde_residual(p, table, g, l1, L=()):
    """LHS - RHS of the bi-tracial SDE indexed by (g, l1, L)."""
    L = tuple(L)
    T = table.get
    lhs = 0
    for k in range(l1):
        for h in range(g + 1):
            for J, Jc in _subsets(L):
                lhs = lhs + T(h, (k,) + J) * T(g - h, (l1 - k - 1,) + Jc)
        if g >= 1:
            lhs = lhs + T(g - 1, (k, l1 - k - 1) + L)
    for r, lr in enumerate(L):
        rest = L[:r] + L[r + 1:]
        lhs = lhs + lr * T(g, (l1 + lr - 1,) + rest)

    rhs = p.gaussian_coeff * T(g, (l1 + 1,) + L)
    for i, ti in p.single_trace.items():
        rhs = rhs + ti * T(g, (l1 + i - 1,) + L)
    for i, j, tij in p.ordered_pairs():
        w = tij * Fraction(2 * i, i + j) if _exact(tij) else tij * (2.0 * i / (i + j))
        acc = 0
        for h in range(g + 1):
            for J, Jc in _subsets(L):
                acc = acc + T(h, (l1 + i - 1,) + J) * T(g - h, (j,) + Jc)
        if g >= 1:
            acc = acc + T(g - 1, (l1 + i - 1, j) + L)
        rhs = rhs + w * acc
    return lhs - rhs


@dataclass
class SDEReport:
    max_abs: float
    checked: int
    skipped: list
    worst: tuple
    exact: bool

    meta_tol: float = 1e-10

    @property
    def passed(self):
        return self.checked > 0 and self.max_abs <= self.meta_tol

    def to_json(self):
        return {"max_abs_residual": self.max_abs, "checked": self.checked,
                "skipped": len(self.skipped), "worst": list(self.worst) if self.worst else None,
                "exact": self.exact, "passed": self.passed, "tol": self.meta_tol}


def _abs(v):
    if isinstance(v, Series):
        return max((abs(float(c)) for c in v.coeffs), default=0.0)
    return abs(complex(v))


def sde_sweep(p, table, gmax=1, lmax=8, lmax_other=None, targets=None, tol=1e-10):
    """Evaluate the SDEs for every (g, n) block the table carries.

    l1 runs over 0..lmax and the remaining lengths L over 1..lmax_other
    (default 3). Equations whose indices fall outside the table are listed
    in ``skipped`` rather than silently dropped.
    """
    if targets is None:
        targets = sorted({(g, len(L)) for g, L in table.entries if g <= gmax})
    lo = 3 if lmax_other is None else lmax_other
    worst, wval, checked, skipped = None, 0.0, 0, []
    exact = True
    for g, n in targets:
        for L in itertools.combinations_with_replacement(range(1, lo + 1), n - 1):
            for l1 in range(lmax + 1):
                try:
                    r = sde_residual(p, table, g, l1, L)
                except CoverageError:
                    skipped.append((g, l1, L))
                    continue
                checked += 1
                if isinstance(r, (float, complex)) or (isinstance(r, Series) and not r.exact):
                    exact = False
                a = _abs(r)
                if worst is None or a > wval:
                    wval, worst = a, (g, l1, L)
    return SDEReport(wval, checked, skipped, worst, exact, 0.0 if exact else tol)
