"""Genus-zero one-cut solution through the Zhukovsky map.

Internally everything is written in w = gamma*z, where

    x(w) = w + alpha + q/w,   q = gamma^2,

so that u_k = v_k gamma^k with v_k = [w^k] V'(x(w)) and all quantities are
polynomial in (alpha, q, v). That keeps the formal mode rational and lets
the same code run on floats, Fractions and Series.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np
from scipy import integrate

from .dirac import BitracialPotential
from .errors import (ContinuationError, ConvergenceError, NegativeDensityError,
                     NoRealBranchError, SeriesError)
from .loop_equations import fold_effective_derivative
from .series import LaurentPoly, Poly, Series, fraction_solve, newton_system

__all__ = [
    "ZhukovskyMap", "SpectralSolution", "Density", "zhukovsky", "zhukovsky_inverse",
    "u_coefficients", "solve_one_cut", "resolvent", "resolvent_z", "density",
    "moments_from_solution", "closed_sum_moment", "state_residual",
    "solution_from_state", "chebyshev_u",
]


@dataclass(frozen=True)
class ZhukovskyMap:
    alpha: object
    gamma: object

    @property
    def a(self):
        return self.alpha + 2 * self.gamma

    @property
    def b(self):
        return self.alpha - 2 * self.gamma

    def __call__(self, z):
        return zhukovsky(self, z)

    def inverse(self, x, return_flag=False):
        return zhukovsky_inverse(self, x, return_flag)


def zhukovsky(m, z):
    return m.alpha + m.gamma * (z + 1 / z)


def _edge_sqrt(m, x):
    """sqrt((x-a)(x-b)) with the cut on [b, a] and ~ x at infinity."""
    x = np.asarray(x, dtype=complex)
    return np.sqrt(x - float(m.a)) * np.sqrt(x - float(m.b))


def zhukovsky_inverse(m, x, return_flag=False):
    """Branch with |z| >= 1. Points on the open cut map to the unit circle."""
    xa = np.asarray(x, dtype=complex)
    s = _edge_sqrt(m, xa)
    z = (xa - float(m.alpha) + s) / (2 * float(m.gamma))
    on_cut = (np.abs(xa.imag) == 0) & (xa.real > float(m.b)) & (xa.real < float(m.a))
    if np.ndim(x) == 0:
        z, on_cut = complex(z), bool(on_cut)
    return (z, on_cut) if return_flag else z


def chebyshev_u(n):
    """Integer coefficients (ascending) of U_n."""
    a, b = [1], [0, 2]
    if n == 0:
        return a
    for _ in range(n - 1):
        nxt = [0] + [2 * c for c in b]
        for i, c in enumerate(a):
            nxt[i] -= c
        a, b = b, nxt
    return b


# --- generic algebra in w -------------------------------------------------

def _nonzero(c):
    if isinstance(c, Series):
        return any(x != 0 for x in c.coeffs)
    return c != 0


def _x_laurent(alpha, q):
    terms = {1: 1, -1: q}
    if _nonzero(alpha):
        terms[0] = alpha
    return LaurentPoly(terms, "w")


def _x_powers(alpha, q, n):
    x = _x_laurent(alpha, q)
    out = [LaurentPoly({0: 1}, "w")]
    for _ in range(n):
        out.append(out[-1] * x)
    return out


def _v_coeffs(poly, xp):
    """v_k = [w^k] V'(x(w)) for k >= 0."""
    acc = LaurentPoly({}, "w")
    for n, c in enumerate(poly.coeffs):
        if _nonzero(c):
            acc = acc + xp[n] * c
    deg = max(len(poly.coeffs) - 1, 1)
    return [acc.coeff(k) for k in range(deg + 1)]


def _w_dx(q, v):
    """W(x(w)) dx/dw as a Laurent polynomial in w."""
    W = LaurentPoly({-k: v[k] * q ** k for k in range(1, len(v)) if _nonzero(v[k])}, "w")
    return W * LaurentPoly({0: 1, -2: -q}, "w")


def _moment(xp_l, wdx):
    acc = 0
    for k, c in xp_l.terms.items():
        cc = wdx.terms.get(-1 - k)
        if cc is not None:
            acc = acc + c * cc
    return acc


def _unknown_moments(p):
    idx = p.bi_indices
    if p.is_even():
        idx = tuple(j for j in idx if j % 2 == 0)
    return idx


def state_residual(p, alpha, q, mvals, symmetric=None):
    """One-cut equations: v_0 = 0, q v_1 = t, m_j = T_j(alpha, q, v)."""
    symmetric = p.is_even() if symmetric is None else symmetric
    moments = dict(mvals)
    if symmetric:
        for j in p.bi_indices:
            if j % 2:
                moments[j] = 0
    eff = fold_effective_derivative(p, moments)
    need = max([len(eff.poly.coeffs) - 1] + list(moments) + [1])
    xp = _x_powers(alpha, q, need)
    v = _v_coeffs(eff.poly, xp)
    wdx = _w_dx(q, v)
    eqs = []
    if not symmetric:
        eqs.append(v[0])
    eqs.append(q * v[1] - p.hooft_t)
    for j in sorted(mvals):
        eqs.append(mvals[j] - _moment(xp[j], wdx))
    return eqs, eff, v


# --- solution object ------------------------------------------------------

@dataclass
class SpectralSolution:
    potential: BitracialPotential
    alpha: object
    q: object
    v: tuple
    eff: object
    symmetric: bool
    mode: str = "numeric"
    order: int | None = None
    var: str | None = None
    _moments: dict = field(default_factory=dict, repr=False)

    @property
    def hooft_t(self):
        return self.potential.hooft_t

    @cached_property
    def gamma(self):
        if isinstance(self.q, Series):
            try:
                return self.q.sqrt()
            except SeriesError:
                return None
        return math.sqrt(self.q)

    @property
    def map(self):
        return ZhukovskyMap(self.alpha, self.gamma)

    @property
    def u(self):
        g = self.gamma
        if g is None:
            raise SeriesError("gamma is irrational at zeroth order; use v and q")
        return tuple(self.v[k] * g ** k for k in range(len(self.v)))

    @property
    def degree(self):
        return len(self.v)

    @property
    def support(self):
        return (float(self.map.b), float(self.map.a))

    def moments(self, lmax):
        missing = [l for l in range(lmax + 1) if l not in self._moments]
        if missing:
            xp = _x_powers(self.alpha, self.q, lmax)
            wdx = _w_dx(self.q, self.v)
            for l in missing:
                self._moments[l] = _moment(xp[l], wdx)
        return {l: self._moments[l] for l in range(lmax + 1)}

    @property
    def moments0(self):
        return self.moments(max(2 * self.degree, 6))

    @cached_property
    def edge_poly(self):
        """M(x) with S'(x)^2 - 4P(x) = M(x)^2 (x-a)(x-b)."""
        q, v = self.q, self.v
        acc = Poly([0])
        for k in range(1, len(v)):
            if not _nonzero(v[k]):
                continue
            cu = chebyshev_u(k - 1)
            for m, c in enumerate(cu):
                if c == 0:
                    continue
                e = (k - 1 - m) // 2
                coef = v[k] * c * (q ** e if e else 1)
                coef = coef * Fraction(1, 2 ** m) if _exactlike(coef) else coef / 2 ** m
                acc = acc + Poly([0] * m + [coef])
        alpha = self.alpha
        return acc.compose(Poly([-alpha, 1])) if _nonzero(alpha) else acc

    def p_poly(self):
        """P(x) = polynomial part of V'(x) W(x)."""
        mom = self.moments(len(self.eff.poly.coeffs))
        c = self.eff.poly.coeffs
        out = [0] * max(len(c) - 1, 1)
        for n, cn in enumerate(c):
            for l in range(n):
                out[n - 1 - l] = out[n - 1 - l] + cn * mom[l]
        return Poly(out)

    def edge_value(self, which="a", deriv=0):
        M = self.edge_poly
        for _ in range(deriv):
            M = M.deriv()
        x = self.map.a if which == "a" else self.map.b
        return M(x)

    def to_float(self):
        def f(c):
            return float(c[0]) if isinstance(c, Series) else float(c)
        return SpectralSolution(self.potential.map_coeffs(f), f(self.alpha), f(self.q),
                                tuple(f(c) for c in self.v), None, self.symmetric)

    def to_dict(self, lmax=8):
        from .series import _scalar_json
        mom = self.moments(lmax)
        d = {
            "kind": "spectral_solution",
            "mode": self.mode,
            "potential": self.potential.to_dict(),
            "alpha": _scalar_json(self.alpha),
            "q": _scalar_json(self.q),
            "v": [_scalar_json(c) for c in self.v],
            "symmetric": self.symmetric,
            "moments": {str(l): _scalar_json(m) for l, m in mom.items()},
        }
        if self.mode == "numeric":
            d["gamma"] = float(self.gamma)
            d["u"] = [float(c) for c in self.u]
            d["support"] = list(self.support)
            d["edge_poly"] = [float(c) for c in self.edge_poly.coeffs]
        return d

    @classmethod
    def from_dict(cls, d):
        from .dirac import _parse_scalar
        p = BitracialPotential.from_dict(d["potential"])
        alpha = _parse_scalar(d["alpha"])
        q = _parse_scalar(d["q"])
        v = tuple(_parse_scalar(c) for c in d["v"])
        mom = {int(k): _parse_scalar(m) for k, m in d["moments"].items()}
        eff = fold_effective_derivative(p, mom)
        return cls(p, alpha, q, v, eff, d["symmetric"], d.get("mode", "numeric"))


def _exactlike(c):
    return isinstance(c, (int, Fraction)) or (isinstance(c, Series) and c.exact)


def solution_from_state(p, alpha, q, mvals, mode="numeric", order=None, var=None):
    sym = p.is_even()
    eqs, eff, v = state_residual(p, alpha, q, mvals, sym)
    return SpectralSolution(p, alpha, q, tuple(v), eff, sym, mode, order, var)


def u_coefficients(eff, m):
    """u_k from V'(x(z)) = sum_k u_k (z^k + z^-k), expanded in z directly."""
    x = LaurentPoly({1: m.gamma, 0: m.alpha, -1: m.gamma})
    acc = LaurentPoly({})
    xp = LaurentPoly({0: 1})
    for c in eff.poly.coeffs:
        acc = acc + xp * c
        xp = xp * x
    d = len(eff.poly.coeffs)
    return tuple(acc.coeff(k) for k in range(max(d, 2)))


# --- numeric solve ---------------------------------------------------------

def _pack_names(p):
    sym = p.is_even()
    names = ([] if sym else ["alpha"]) + ["q"] + [f"m{j}" for j in _unknown_moments(p)]
    return sym, names


def _unpack(p, sym, y):
    k = 0
    alpha = 0.0
    if not sym:
        alpha = y[0]
        k = 1
    q = y[k]
    m = {j: y[k + 1 + i] for i, j in enumerate(_unknown_moments(p))}
    return alpha, q, m


def _float_residual(p, sym, y):
    alpha, q, m = _unpack(p, sym, y)
    if q <= 0:
        raise ValueError("q must stay positive")
    eqs, _, _ = state_residual(p, alpha, q, m, sym)
    return np.array([float(e) for e in eqs])


def _gaussian_start(p0, sym):
    t = float(p0.hooft_t)
    g = float(p0.gaussian_coeff)
    q = t / g
    mom = {}
    xp = _x_powers(0.0, q, max(_unknown_moments(p0) + (2,)))
    wdx = _w_dx(q, [0.0, g])
    for j in _unknown_moments(p0):
        mom[j] = _moment(xp[j], wdx)
    y = ([] if sym else [0.0]) + [q] + [mom[j] for j in _unknown_moments(p0)]
    return np.array(y, float)


def _fd_jac(fun, y, h=1e-7):
    f0 = fun(y)
    J = np.empty((len(f0), len(y)))
    for i in range(len(y)):
        hi = h * max(1.0, abs(y[i]))
        yp, ym = y.copy(), y.copy()
        yp[i] += hi
        ym[i] -= hi
        J[:, i] = (fun(yp) - fun(ym)) / (2 * hi)
    return J


def continue_from_gaussian(p, y0=None, start=None, tol=1e-13, h0=0.25, hmin=1e-7,
                           max_steps=2000):
    """Pseudo-arclength continuation along (1-s) P_start + s P from s=0 to 1.

    Returns (y, path) with y the packed state at s=1. Raises
    ContinuationError when a fold in s is met before reaching the target.
    """
    p = p.to_float()
    sym = p.is_even()
    if start is None:
        start = BitracialPotential(1.0, {}, {}, p.hooft_t)
    idx = _unknown_moments(p)
    if y0 is None:
        q0 = float(p.hooft_t) / float(start.gaussian_coeff)
        xp = _x_powers(0.0, q0, max(idx + (2,)))
        wdx = _w_dx(q0, [0.0, float(start.gaussian_coeff)])
        y0 = np.array(([] if sym else [0.0]) + [q0] + [_moment(xp[j], wdx) for j in idx])

    def H(Y):
        s = Y[-1]
        ps = start.blend(p, s)
        # blend may drop indices with zero coefficient; evaluate with target layout
        return _float_residual_layout(ps, p, sym, Y[:-1])

    Y = np.append(np.asarray(y0, float), 0.0)
    # initial tangent
    J = _fd_jac(H, Y)
    tau = _null_vector(J)
    if tau[-1] < 0:
        tau = -tau
    h = h0
    path = [Y.copy()]
    steps = 0
    while Y[-1] < 1.0 - 1e-14:
        steps += 1
        if steps > max_steps:
            raise ContinuationError("too many continuation steps", last_good=Y[:-1],
                                    last_params=Y[-1])
        hs = h
        if tau[-1] > 0 and Y[-1] + hs * tau[-1] > 1.0:
            hs = (1.0 - Y[-1]) / tau[-1]
        pred = Y + hs * tau
        ok, Yn = _corrector(H, pred, tau, tol=max(tol, 1e-12))
        if not ok:
            h *= 0.5
            if h < hmin:
                raise ContinuationError(
                    f"continuation stalled at s={Y[-1]:.6g} (fold or edge collapse)",
                    last_good=Y[:-1], last_params=Y[-1])
            continue
        Jn = _fd_jac(H, Yn)
        tn = _null_vector(Jn)
        if np.dot(tn, tau) < 0:
            tn = -tn
        if tn[-1] <= 0:
            raise ContinuationError(
                f"fold in the coupling path at s={Yn[-1]:.8g}: target lies past a critical point",
                last_good=Yn[:-1], last_params=Yn[-1])
        Y, tau = Yn, tn
        path.append(Y.copy())
        h = min(h * 1.5, 1.0)
    # polish exactly at s=1
    def F(y):
        return _float_residual_layout(p, p, sym, y)
    y = newton_system(F, Y[:-1], tol=tol, max_iter=30)
    return y, path


def _float_residual_layout(ps, p_layout, sym, y):
    alpha, q, m = _unpack(p_layout, sym, y)
    if not q > 0:
        raise ValueError("q must stay positive")
    eqs, _, _ = state_residual(ps, alpha, q, m, sym)
    # blended potentials may lack some bi-trace indices at s=0; those moment
    # equations are still well defined through T_j(alpha, q, v)
    return np.array([float(e) for e in eqs])


def _null_vector(J):
    _, _, vt = np.linalg.svd(J)
    t = vt[-1]
    return t / np.linalg.norm(t)


def _corrector(H, pred, tau, tol, max_iter=12):
    Y = pred.copy()
    for _ in range(max_iter):
        try:
            f = H(Y)
        except (ValueError, ZeroDivisionError, OverflowError):
            return False, Y
        g = np.append(f, np.dot(tau, Y - pred))
        if np.max(np.abs(g)) <= tol:
            return True, Y
        try:
            J = np.vstack([_fd_jac(H, Y), tau])
            dY = np.linalg.solve(J, -g)
        except (np.linalg.LinAlgError, ValueError, ZeroDivisionError, OverflowError):
            return False, Y
        Y = Y + dY
        if np.max(np.abs(dY)) > 10 * (1 + np.max(np.abs(pred))):
            return False, Y
    try:
        f = H(Y)
    except (ValueError, ZeroDivisionError, OverflowError):
        return False, Y
    return bool(np.max(np.abs(f)) <= 1e3 * tol), Y


def solve_numeric(p, tol=1e-13, y0=None, **kw):
    p = p.to_float()
    sym = p.is_even()
    if y0 is not None:
        y = newton_system(lambda y: _float_residual(p, sym, y), y0, tol=tol, max_iter=40)
    else:
        y, _ = continue_from_gaussian(p, tol=tol, **kw)
    alpha, q, m = _unpack(p, sym, y)
    if q <= 0:
        raise NoRealBranchError("no real one-cut branch (gamma^2 <= 0)")
    return solution_from_state(p, float(alpha), float(q), {j: float(v) for j, v in m.items()})


# --- formal solve ----------------------------------------------------------

def _const(c):
    return c[0] if isinstance(c, Series) else c


def formal_family(p, order, var="eps"):
    """Multiply every non-Gaussian coupling of ``p`` by the formal variable."""
    eps = Series([0, 1], order, var)
    return p.scaled(eps)


def solve_formal(p, order, var=None, max_iter=None):
    """Series solution in the formal variable carried by the couplings of ``p``.

    Uses Newton with the exact Jacobian frozen at the expansion point; each
    sweep fixes at least one more order.
    """
    if var is None:
        vs = [c.var for c in _coupling_values(p) if isinstance(c, Series)]
        var = vs[0] if vs else "eps"
    sym = p.is_even()
    idx = _unknown_moments(p)
    p0 = p.map_coeffs(lambda c: Fraction(_const(c)) if not isinstance(_const(c), float) else _const(c))
    t = Fraction(p.hooft_t)
    g0 = Fraction(_const(p.gaussian_coeff))
    # Gaussian expansion point (the (1,1) term shifts nothing for even moments,
    # but is kept in the fold for odd ones)
    y0 = _formal_start(p0, sym, idx, t, g0)
    n = len(y0)

    def resid(pp, y):
        alpha = 0 if sym else y[0]
        k = 0 if sym else 1
        q = y[k]
        m = {j: y[k + 1 + i] for i, j in enumerate(idx)}
        eqs, _, _ = state_residual(pp, alpha, q, m, sym)
        return eqs

    # exact Jacobian at the expansion point via dual numbers
    J = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        yd = [Series([Fraction(c)], 1, "_d") for c in y0]
        yd[i] = Series([Fraction(y0[i]), Fraction(1)], 1, "_d")
        eqs = resid(p0, yd)
        for r, e in enumerate(eqs):
            J[r][i] = e[1] if isinstance(e, Series) else Fraction(0)
    y = [Series([c], order, var) for c in y0]
    max_iter = order + 3 if max_iter is None else max_iter
    for _ in range(max_iter):
        eqs = [e if isinstance(e, Series) else Series([e], order, var) for e in resid(p, y)]
        if all(c == 0 for e in eqs for c in e.coeffs):
            break
        dy = fraction_solve(J, eqs)
        y = [yi - di for yi, di in zip(y, dy)]
    else:
        eqs = resid(p, y)
        if not all(c == 0 for e in eqs for c in (e.coeffs if isinstance(e, Series) else [e])):
            raise ConvergenceError("formal iteration did not close")
    alpha = 0 if sym else y[0]
    k = 0 if sym else 1
    q = y[k]
    m = {j: y[k + 1 + i] for i, j in enumerate(idx)}
    return solution_from_state(p, alpha, q, m, mode="formal", order=order, var=var)


def _coupling_values(p):
    yield p.gaussian_coeff
    yield from p.single_trace.values()
    yield from p.bi_trace.values()


def _formal_start(p0, sym, idx, t, g0):
    # Gaussian part may include a (1,1) bi-trace term which only moves odd moments
    q = t / g0
    y = [] if sym else [Fraction(0)]
    y.append(q)
    xp = _x_powers(0, q, max(idx + (2,)))
    wdx = _w_dx(q, [0, g0])
    # odd moments vanish at the Gaussian point for any (1,1) coupling since alpha=0
    for j in idx:
        y.append(Fraction(_moment(xp[j], wdx)))
    return y


def solve_one_cut(p, mode="numeric", order=None, var="eps", tol=1e-13, **kw):
    """Solve the one-cut problem.

    mode="numeric": continuation from the Gaussian point.
    mode="formal": ``p`` either carries Series couplings already, or every
    non-Gaussian coupling is scaled by a formal variable of the given order.
    """
    if mode == "numeric":
        return solve_numeric(p, tol=tol, **kw)
    if mode == "formal":
        has_series = any(isinstance(c, Series) for c in _coupling_values(p))
        if not has_series:
            if order is None:
                raise ValueError("formal mode needs an order")
            p = formal_family(p.map_coeffs(_to_exact), order, var)
        else:
            order = min(c.order for c in _coupling_values(p) if isinstance(c, Series))
        return solve_formal(p, order)
    raise ValueError(f"unknown mode {mode!r}")


def _to_exact(c):
    if isinstance(c, float):
        return Fraction(c).limit_denominator(10 ** 12)
    return c


# --- derived objects -------------------------------------------------------

def moments_from_solution(sol, lmax):
    return sol.moments(lmax)


def resolvent_z(sol):
    return LaurentPoly({-k: c for k, c in enumerate(sol.u) if k >= 1}, "z")


def resolvent(sol, x):
    """W(x) = (V'(x) - M(x) sqrt((x-a)(x-b)))/2, with sqrt ~ x at infinity."""
    V = sol.eff.poly.to_float()
    M = sol.edge_poly.to_float()
    xa = np.asarray(x, dtype=complex)
    out = 0.5 * (V(xa) - M(xa) * _edge_sqrt(sol.map, xa))
    return complex(out) if np.ndim(x) == 0 else out


def resolvent_from_z(sol, x):
    z = zhukovsky_inverse(sol.map, x)
    u = sol.u
    return sum(float(u[k]) * z ** (-k) for k in range(1, len(u)))


def closed_sum_moment(sol, l):
    """Closed double-sum moment formula over i < j < i + d, i + j < l.

    Cross-check only: it reproduces the residue moments when u_k = 0 for
    k >= 2 (Gaussian-like curves) and misses contributions otherwise.
    """
    alpha, gamma, u = float(sol.alpha), float(sol.gamma), sol.u
    d = sol.degree
    tot = 0.0
    for i in range(l):
        for j in range(i + 1, i + d):
            if i + j >= l or j - i >= len(u):
                continue
            tot += ((j - i) * math.factorial(l)
                    / (math.factorial(i + 1) * math.factorial(j + 1) * math.factorial(l - 1 - i - j))
                    * alpha ** (l - 1 - i - j) * gamma ** (i + j + 2) * float(u[j - i]))
    return tot


@dataclass(frozen=True)
class Density:
    """rho(x) = factor_poly(x) sqrt((a-x)(x-b)) / (2 pi t) on [b, a]."""

    factor_poly: Poly
    support: tuple
    hooft_t: float = 1.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        b, a = self.support
        inside = (x > b) & (x < a)
        r = np.zeros_like(x)
        xi = x[inside] if x.ndim else x
        val = self.factor_poly(xi) * np.sqrt(np.clip((a - xi) * (xi - b), 0, None)) / (
            2 * np.pi * self.hooft_t)
        if x.ndim:
            r[inside] = val
            return r
        return float(val) if inside else 0.0

    def _theta_grid(self, n=20001):
        b, a = self.support
        c, w = (a + b) / 2, (a - b) / 2
        th = np.linspace(0.0, np.pi, n)
        x = c - w * np.cos(th)
        # rho dx in theta: factor(x) w^2 sin^2(th) / (2 pi t)
        f = self.factor_poly(x) * w ** 2 * np.sin(th) ** 2 / (2 * np.pi * self.hooft_t)
        return th, x, f

    def cdf(self, x):
        th, xs, f = self._theta_grid()
        F = integrate.cumulative_simpson(f, x=th, initial=0.0)
        return np.interp(x, xs, F, left=0.0, right=F[-1])

    def total_mass(self):
        b, a = self.support
        val, _ = integrate.quad(self.__call__, b, a, epsabs=1e-13, epsrel=1e-13, limit=200)
        return val

    def moment(self, l):
        b, a = self.support
        val, _ = integrate.quad(lambda x: x ** l * self(x), b, a, epsabs=1e-13,
                                epsrel=1e-13, limit=200)
        return val

    def min_factor(self):
        from .series import poly_real_roots
        b, a = self.support
        pts = [b, a] + poly_real_roots(self.factor_poly.deriv(), (b, a), 1e-12)
        return min(float(self.factor_poly(x)) for x in pts)

    def samples(self, n=201):
        b, a = self.support
        x = np.linspace(b, a, n)
        return x, self(x)


def density(sol, allow_negative=False, tol=1e-12):
    M = sol.edge_poly.to_float()
    d = Density(M, sol.support, float(sol.hooft_t))
    if not allow_negative:
        mn = d.min_factor()
        if mn < -tol * (1 + M.norm()):
            raise NegativeDensityError(
                f"density negative on the cut (min factor {mn:.3g}): coupling past a phase boundary")
    return d
