"""Critical points, matching curves, the quartic phase diagram, double scaling.

Critical points are cusps of the spectral curve: the one-cut system is
augmented by M(edge) = 0 (and M'(edge) = 0 for the (5,2) point) with the
free couplings as extra unknowns, and solved by Newton from a subcritical
start obtained by continuation.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from .dirac import cubic, hexic, potential_to_bitracial, quartic, single_trace, DiracPotential
from .errors import (ConfigError, ConvergenceError, ContinuationError, NoRealBranchError,
                     RootFindingError)
from .series import newton_system
from .spectral import (_pack_names, _unpack, density, solution_from_state, solve_numeric,
                       state_residual)

__all__ = ["family", "CriticalPoint", "find_critical", "edge_exponent", "PhaseCurve",
           "quartic_phase_diagram", "phase_diagram_csv", "matching_tuning", "PainleveSeries",
           "painleve_series", "singular_exponent", "minimal_model_label", "region_label",
           "matching_closed_form", "transition_closed_form"]


# --- families ---------------------------------------------------------------

_FAMILY_PARAMS = {
    "quartic": ("t2", "t4"), "cubic": ("t2", "t3"), "hexic": ("t2", "t4", "t6"),
    "single-quartic": ("t2", "t4"), "single-cubic": ("t2", "t3"),
    "single-hexic": ("t2", "t4", "t6"),
}


def family(name, **c):
    """Named one- or two-parameter potential families; missing t2 defaults to 1."""
    if name not in _FAMILY_PARAMS:
        raise ConfigError(f"unknown family {name!r}")
    unknown = set(c) - set(_FAMILY_PARAMS[name])
    if unknown:
        raise ConfigError(f"unknown couplings {sorted(unknown)} for {name}")
    t2 = c.get("t2", 1)
    if name == "quartic":
        return potential_to_bitracial(quartic(t2, c["t4"]))
    if name == "cubic":
        return potential_to_bitracial(cubic(t2, c["t3"]))
    if name == "hexic":
        return potential_to_bitracial(hexic(t2, c["t4"], c["t6"]))
    if name == "single-quartic":
        return single_trace({4: c["t4"]}, gaussian=t2)
    if name == "single-cubic":
        return single_trace({3: c["t3"]}, gaussian=t2)
    return single_trace({4: c["t4"], 6: c["t6"]}, gaussian=t2)


def minimal_model_label(p):
    """(2m+1, 2) for even degree 2m+2; the cubic is (3, 2)."""
    if isinstance(p, str):
        name = p.replace("single-", "")
        deg = {"quartic": 4, "cubic": 3, "hexic": 6}.get(name)
        if deg is None:
            raise ConfigError(f"no minimal-model assignment for {p!r}")
    elif isinstance(p, DiracPotential):
        deg = p.degree
    else:
        deg = p.degree
    if deg == 3:
        return (3, 2)
    if deg >= 4 and deg % 2 == 0:
        m = (deg - 2) // 2
        return (2 * m + 1, 2)
    raise ConfigError(f"degree {deg} is outside the classified families")


# --- critical points ----------------------------------------------------------

@dataclass
class CriticalPoint:
    family: str
    couplings: dict
    gamma_c: float
    alpha_c: float
    edge: str
    conditions: int
    minimal_model: tuple
    singular_exponent_g0: float = 2.5
    residual: float = 0.0
    solution: object = field(default=None, repr=False)

    def to_json(self):
        return {"family": self.family, "couplings": self.couplings, "gamma_c": self.gamma_c,
                "alpha_c": self.alpha_c, "edge": self.edge, "edge_conditions": self.conditions,
                "minimal_model": list(self.minimal_model),
                "singular_exponent_g0": self.singular_exponent_g0, "residual": self.residual}


def _augmented(name, free, fixed, edge, nconds, layout):
    sym, _ = _pack_names(layout)

    def split(x):
        n = len(x) - len(free)
        return x[:n], dict(zip(free, x[n:]))

    def F(x):
        y, fv = split(x)
        p = family(name, **fixed, **fv).to_float()
        alpha, q, m = _unpack(layout, sym, y)
        if q <= 0:
            raise ValueError("q must stay positive")
        eqs, _, _ = state_residual(p, alpha, q, m, sym)
        sol = solution_from_state(p, alpha, q, m)
        extra = [sol.edge_value(edge, k) for k in range(nconds)]
        return np.array([float(e) for e in eqs] + [float(e) for e in extra])

    return F, split


def find_critical(name, free, fixed=None, start=None, edge="auto", tol=1e-13):
    """Cusp of the spectral curve in the couplings listed in ``free``.

    ``start`` gives subcritical values of the free couplings from which the
    one-cut state is obtained by continuation. One edge condition per free
    coupling: M(edge) = 0, then M'(edge) = 0.
    """
    fixed = dict(fixed or {})
    if start is None:
        raise ConfigError("find_critical needs a subcritical start for the free couplings")
    p0 = family(name, **fixed, **start)
    sol0 = solve_numeric(p0)
    if edge == "auto":
        ma, mb = abs(float(sol0.edge_value("a"))), abs(float(sol0.edge_value("b")))
        edge = "a" if ma <= mb else "b"
    sym, _ = _pack_names(p0)
    y0 = []
    if not sym:
        y0.append(float(sol0.alpha))
    y0.append(float(sol0.q))
    from .spectral import _unknown_moments
    mom = sol0.moments(max(_unknown_moments(p0) + (2,)))
    y0 += [float(mom[j]) for j in _unknown_moments(p0)]
    x0 = np.array(y0 + [float(start[f]) for f in free])
    F, split = _augmented(name, list(free), fixed, edge, len(free), p0)
    try:
        x = newton_system(F, x0, tol=tol, max_iter=60)
    except ConvergenceError as e:
        raise RootFindingError(f"no cusp found from start {start}: {e}", last=getattr(e, "last", None),
                               diagnostics=getattr(e, "diagnostics", None)) from e
    y, fv = split(x)
    p = family(name, **fixed, **fv).to_float()
    alpha, q, m = _unpack(p0, sym, y)
    sol = solution_from_state(p, alpha, q, m)
    couplings = dict(fixed, **{f: float(v) for f, v in fv.items()})
    return CriticalPoint(name, couplings, math.sqrt(q), float(alpha), edge, len(free),
                         minimal_model_label(name), 2.5, float(np.max(np.abs(F(x)))), sol)


def edge_exponent(sol, edge="a", eps=(1e-2, 1e-3, 1e-4, 1e-5, 1e-6)):
    """Log-log slope of rho near an edge over the given distances."""
    d = density(sol, allow_negative=True)
    b, a = d.support
    xs = [a - e for e in eps] if edge == "a" else [b + e for e in eps]
    rho = np.abs(np.array([d(x) for x in xs]))
    slope, _ = np.polyfit(np.log(eps), np.log(rho), 1)
    return float(slope)


# --- matching ---------------------------------------------------------------------

def matching_closed_form(t4):
    """Reference closed form of the quartic matching curve (regression column)."""
    if t4 == 0:
        return 1.0
    if 1 + 12 * t4 < 0:
        return float("nan")
    r = math.sqrt(1 + 12 * t4)
    return -((1 + 12 * t4) ** 1.5 - 4 - 144 * t4 + (36 * t4 + 3) * r) / (72 * t4)


def transition_closed_form(t4):
    """Reference closed form for the spectral-transition curve (regression column)."""
    if t4 <= 0:
        return float("nan")
    return -(5 * t4 + 3) / math.sqrt(t4)


@dataclass
class Matching:
    model: str
    target: dict
    couplings: dict
    single_solution: object
    dirac_solution: object
    residuals: dict

    def to_json(self):
        return {"model": self.model, "target": self.target, "couplings": self.couplings,
                "residuals": self.residuals}


def _single_solution(model, target):
    """Single-trace solution at the target; at a cusp use the augmented solve."""
    name = "single-" + model
    try:
        return solve_numeric(family(name, **target))
    except (ContinuationError, ConvergenceError, NoRealBranchError):
        pass
    # target sits on the cusp itself: reach it with the augmented solve
    free = [k for k in target if k != "t2"]
    start = {k: 0.9 * float(target[k]) for k in free}
    cp = find_critical(name, free, fixed={k: target[k] for k in target if k == "t2"},
                       start=start)
    miss = max(abs(cp.couplings[k] - float(target[k])) for k in free)
    if miss > 1e-8:
        raise ConfigError(f"target {target} has no one-cut solution (nearest cusp {cp.couplings})")
    return cp.solution


def matching_tuning(model, target, single_solution=None):
    """Dirac couplings whose folded S'(x) equals the single-trace S'(x) at ``target``.

    quartic: t4 = target t4, t2 = 1 - 3 T2 t4.
    cubic:   t3 = target t3, t2 = 1 - 2 t3 m1 (the x^1 condition); the x^0
             condition t2 m1 + t3 m2 = 0 is reported in ``residuals``.
    hexic:   t6 = target t6, t4 = target t4 - 10 T2 t6, t2 = 1 - 3 T2 t4 - 5 T4 t6.
    """
    sol = single_solution if single_solution is not None else _single_solution(model, target)
    T = sol.moments(6)
    if model == "quartic":
        t4 = float(target["t4"])
        t2 = 1 - 3 * float(T[2]) * t4
        coup = {"t2": t2, "t4": t4}
    elif model == "cubic":
        t3 = float(target["t3"])
        m1 = float(T[1])
        t2 = 1 - 2 * t3 * m1
        coup = {"t2": t2, "t3": t3}
    elif model == "hexic":
        t6 = float(target["t6"])
        T2, T4 = float(T[2]), float(T[4])
        t4 = float(target["t4"]) - 10 * T2 * t6
        t2 = 1 - 3 * T2 * t4 - 5 * T4 * t6
        coup = {"t2": t2, "t4": t4, "t6": t6}
    else:
        raise ConfigError(f"no matching rule for {model!r}")
    p = family(model, **coup).to_float()
    from .loop_equations import fold_effective_derivative
    eff = fold_effective_derivative(p, {j: float(v) for j, v in T.items()})
    target_eff = sol.eff.poly.to_float() if sol.eff is not None else None
    diff = {}
    if target_eff is not None:
        n = max(len(eff.poly.coeffs), len(target_eff.coeffs))
        for k in range(n):
            a = float(eff.poly.coeffs[k]) if k < len(eff.poly.coeffs) else 0.0
            b = float(target_eff.coeffs[k]) if k < len(target_eff.coeffs) else 0.0
            diff[f"x^{k}"] = a - b
    dirac = solution_from_state(p, sol.alpha, sol.q,
                                {j: T[j] for j in _moment_keys(p)})
    return Matching(model, dict(target), coup, sol, dirac, diff)


def _moment_keys(p):
    from .spectral import _unknown_moments
    return _unknown_moments(p)


# --- phase diagram ------------------------------------------------------------------

def region_label(t2, t4):
    """Quadrant rule: formal iff the Gaussian term is positive, convergent iff t4 > 0."""
    formal = t2 > 0
    convergent = t4 > 0
    if formal and convergent:
        return "both"
    if formal:
        return "formal"
    if convergent:
        return "convergent"
    return "neither"


@dataclass
class PhaseCurve:
    label: str
    samples: list
    closed_form: str | None = None


def _rho0_state(t4, t2, y0):
    """Newton on (q, m2, t2) with M(0) = 0 at fixed t4."""
    layout = family("quartic", t2=1.0, t4=t4)
    F, split = _augmented_center(t4, layout)
    x = newton_system(F, np.array(list(y0) + [t2]), tol=1e-13, max_iter=60)
    return x


def _augmented_center(t4, layout):
    sym, _ = _pack_names(layout)

    def split(x):
        return x[:-1], x[-1]

    def F(x):
        y, t2 = split(x)
        p = family("quartic", t2=float(t2), t4=t4).to_float()
        alpha, q, m = _unpack(layout, sym, y)
        if q <= 0:
            raise ValueError("q must stay positive")
        eqs, _, _ = state_residual(p, alpha, q, m, sym)
        sol = solution_from_state(p, alpha, q, m)
        return np.array([float(e) for e in eqs] + [float(sol.edge_poly(0.0))])

    return F, split


def _state_vector(sol):
    from .spectral import _unknown_moments
    y = [] if sol.symmetric else [float(sol.alpha)]
    y.append(float(sol.q))
    mom = sol.moments(max(_unknown_moments(sol.potential) + (2,)))
    return y + [float(mom[j]) for j in _unknown_moments(sol.potential)]


def _transition_first(t4):
    """Walk t2 down from 1 at fixed t4 > 0 until M(0) changes sign, then polish."""
    sol = solve_numeric(family("quartic", t2=1.0, t4=t4))
    y = _state_vector(sol)
    t2, step = 1.0, 0.25
    prev_y, prev_t2 = y, t2
    while True:
        t2n = t2 - step
        p = family("quartic", t2=t2n, t4=t4).to_float()
        try:
            s = solve_numeric(p, y0=np.array(y))
        except ConvergenceError:
            step /= 2
            if step < 1e-6:
                raise
            continue
        if float(s.edge_poly(0.0)) < 0:
            break
        prev_y, prev_t2 = _state_vector(s), t2n
        y, t2 = prev_y, t2n
    return _rho0_state(t4, prev_t2, prev_y)


def quartic_phase_diagram(t4_grid, matching=True, transition=True, critical=True):
    """Rows for each t4: transition (rho(0) = 0), matching, Dirac critical line, regions."""
    t4s = [float(t) for t in t4_grid]
    rows = {t: {"t4": t} for t in t4s}
    # spectral transition, continued along increasing t4 > 0
    if transition:
        x = None
        for t in sorted(t for t in t4s if t > 0):
            try:
                x = _rho0_state(t, x[-1], x[:-1]) if x is not None else _transition_first(t)
                rows[t]["t2_transition"] = float(x[-1])
            except ConvergenceError:
                x = None
                rows[t]["t2_transition"] = float("nan")
    # matching curve from the single-trace quartic at the same t4
    if matching:
        for t in t4s:
            T2 = _single_quartic_T2(t)
            rows[t]["t2_matching"] = 1 - 3 * T2 * t if T2 == T2 else float("nan")
    # Dirac critical line for t4 < 0
    if critical:
        prev = None
        for t in sorted((t for t in t4s if t < 0), reverse=True):
            try:
                rows[t]["t2_critical"] = _dirac_critical_t2(t, prev)
                prev = rows[t]["t2_critical"]
            except (ConvergenceError, ContinuationError, ConfigError):
                rows[t]["t2_critical"] = float("nan")
    out = []
    for t in t4s:
        r = rows[t]
        r.setdefault("t2_transition", float("nan"))
        r.setdefault("t2_matching", float("nan"))
        r.setdefault("t2_critical", float("nan"))
        r["t2_transition_closed_form"] = transition_closed_form(t)
        r["t2_matching_closed_form"] = matching_closed_form(t)
        tr, cf = r["t2_transition"], r["t2_transition_closed_form"]
        r["transition_deviation"] = abs(tr - cf) if tr == tr and cf == cf else float("nan")
        m = r["t2_matching"]
        r["region_label"] = region_label(m, t) if m == m else "past-critical"
        r["flag"] = "" if m == m else "past-criticality"
        out.append(r)
    return out


def _single_quartic_T2(t4):
    """T2 = q + t4 q^3 on the Gaussian branch of 3 t4 q^2 + q - 1 = 0."""
    if t4 == 0:
        return 1.0
    disc = 1 + 12 * t4
    if disc < 0:
        return float("nan")
    q = 2 / (1 + math.sqrt(disc))
    return q + t4 * q ** 3


def _dirac_critical_t2(t4, t2_guess=None):
    guess = 8 * math.sqrt(-t4 / 3) if t2_guess is None else t2_guess
    start_t2 = guess * 1.1 + 0.05
    cp = find_critical("quartic", ["t2"], fixed={"t4": t4}, start={"t2": start_t2})
    return cp.couplings["t2"]


PHASE_COLUMNS = ["t4", "t2_transition", "t2_matching", "region_label", "t2_critical",
                 "t2_transition_closed_form", "t2_matching_closed_form",
                 "transition_deviation", "flag"]

PHASE_COLUMN_DOCS = {
    "t4": "quartic Dirac coupling",
    "t2_transition": "t2 where rho(0) = 0 on the Gaussian-continued branch (t4 > 0)",
    "t2_matching": "1 - 3 T2 t4 with T2 from the single-trace quartic at t4",
    "region_label": "quadrant of (t2_matching, t4): formal / convergent / both / neither",
    "t2_critical": "Dirac critical line: cusp M(a) = 0 with t2 free (t4 < 0)",
    "t2_transition_closed_form": "reference closed form -(5 t4 + 3)/sqrt(t4)",
    "t2_matching_closed_form": "reference closed form of the matching curve",
    "transition_deviation": "|t2_transition - t2_transition_closed_form|",
    "flag": "past-criticality when the single-trace quartic has no one-cut solution",
}


def phase_diagram_csv(rows, fh, config=None):
    import csv
    header = {"columns": PHASE_COLUMN_DOCS, "version": __version__, "config": config or {}}
    fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(PHASE_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in PHASE_COLUMNS])


def _fmt(v):
    if isinstance(v, float):
        return "nan" if v != v else repr(v)
    return v


# --- Painleve I --------------------------------------------------------------------------

@dataclass
class PainleveSeries:
    """v(y) = sqrt(y) sum_k a_k y^(-5k/2) solving y = v^2 - v''/3."""

    coefficients: list
    order: int

    @staticmethod
    def exponent(k):
        return Fraction(1, 2) - Fraction(5 * k, 2)

    def residual(self):
        """Coefficients of y^(1 - 5k/2) in v^2 - v''/3 - y for k = 0..order."""
        a = self.coefficients
        out = []
        for k in range(self.order + 1):
            s = sum(a[i] * a[k - i] for i in range(k + 1))
            if k >= 1:
                e = self.exponent(k - 1)
                s -= Fraction(1, 3) * a[k - 1] * e * (e - 1)
            if k == 0:
                s -= 1
            out.append(s)
        return out

    def __call__(self, y):
        return sum(float(c) * y ** float(self.exponent(k)) for k, c in enumerate(self.coefficients))

    def to_json(self):
        return {"order": self.order, "coefficients": [str(c) for c in self.coefficients]}


def painleve_series(order):
    if order < 0:
        raise ConfigError("order must be >= 0")
    a = [Fraction(1)]
    for k in range(1, order + 1):
        e = PainleveSeries.exponent(k - 1)
        rhs = Fraction(1, 3) * a[k - 1] * e * (e - 1) - sum(a[i] * a[k - i] for i in range(1, k))
        a.append(rhs / 2)
    return PainleveSeries(a, order)


# --- ratio analysis -------------------------------------------------------------------------

@dataclass
class RatioAnalysis:
    t_c: float
    exponent: float
    finite_radius: bool
    diagnostics: dict

    def to_json(self):
        return {"t_c": self.t_c, "exponent": self.exponent, "finite_radius": self.finite_radius,
                "diagnostics": self.diagnostics}


def singular_exponent(coeffs, g=0, min_terms=20, tail=12, fit_degree=4):
    """Domb-Sykes analysis of f_n ~ C t_c^-n n^-(theta+1).

    Fits r_n = f_n / f_{n-1} = mu (1 - (theta+1)/n + ...) as a polynomial in
    1/n of degree ``fit_degree`` over the last ``tail`` ratios, and
    returns t_c = 1/mu and theta; theta is the exponent of (t - t_c) in the
    singular part (5/2 for g = 0 pure gravity, 0 for the g = 1 logarithm).
    """
    f = [float(c) for c in coeffs]
    nz = [n for n, c in enumerate(f) if c != 0]
    if len(f) < min_terms:
        raise ConfigError(f"ratio analysis needs at least {min_terms} coefficients, got {len(f)}")
    if not nz or nz[-1] < len(f) // 2:
        return RatioAnalysis(float("inf"), float("nan"), False, {"reason": "no singularity: "
                                                                    "series terminates"})
    n = np.arange(1, len(f))
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.array(f[1:]) / np.array(f[:-1])
    ok = np.isfinite(r)
    n, r = n[ok], r[ok]
    tail = min(tail, len(n))
    if tail <= fit_degree + 1:
        raise ConfigError("too few usable ratios for the requested fit degree")
    n, r = n[-tail:], r[-tail:]
    X = np.vstack([n ** -float(k) for k in range(fit_degree + 1)]).T
    c, *_ = np.linalg.lstsq(X, r, rcond=None)
    mu, b = c[0], c[1]
    theta = -b / mu - 1
    diffs = np.diff(np.abs(r))
    monotone = bool(np.all(diffs >= 0) or np.all(diffs <= 0))
    return RatioAnalysis(float(1 / mu), float(theta), True,
                         {"mu": float(mu), "slope": float(b), "fit": [float(x) for x in c],
                          "terms_used": int(len(n)), "monotone_ratios": monotone, "g": g})
