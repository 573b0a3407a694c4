"""Truncated power series, polynomials and Laurent polynomials.

Coefficients are either exact (``fractions.Fraction``/``int``) or floating.
All containers are immutable and work with any coefficient type that
supports ``+``, ``-`` and ``*`` (including :class:`Series` itself, which is
how the formal-mode solver runs Laurent algebra over series coefficients).
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from .errors import (ConvergenceError, RootFindingError, SeriesError,
                     SingularJacobianError)

__all__ = [
    "Series", "Poly", "LaurentPoly", "series_arith", "laurent_residue",
    "poly_real_roots", "newton_system", "is_exact", "to_fraction",
    "fraction_solve",
]


def is_exact(c):
    return isinstance(c, (int, Fraction)) and not isinstance(c, bool)


def to_fraction(c):
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"cannot convert {c!r} to an exact rational")


def _is_zero(c):
    if isinstance(c, Series):
        return all(_is_zero(x) for x in c.coeffs)
    try:
        return c == 0
    except Exception:  # pragma: no cover - exotic coefficient types
        return False


class Series:
    """Truncated power series sum_{k<=order} c_k x^k in variable ``var``."""

    __slots__ = ("coeffs", "order", "var")

    def __init__(self, coeffs, order=None, var="t"):
        coeffs = list(coeffs)
        if order is None:
            order = max(len(coeffs) - 1, 0)
        if order < 0:
            raise SeriesError("truncation order must be nonnegative")
        coeffs = coeffs[:order + 1]
        zero = 0
        coeffs += [zero] * (order + 1 - len(coeffs))
        self.coeffs = tuple(coeffs)
        self.order = int(order)
        self.var = var

    # construction helpers
    @classmethod
    def variable(cls, order, var="t", exact=True):
        one = 1 if exact else 1.0
        return cls([0, one], order, var)

    @classmethod
    def constant(cls, c, order, var="t"):
        return cls([c], order, var)

    @property
    def exact(self):
        return all(is_exact(c) for c in self.coeffs)

    def __getitem__(self, k):
        return self.coeffs[k] if 0 <= k <= self.order else 0

    def __len__(self):
        return self.order + 1

    def __iter__(self):
        return iter(self.coeffs)

    def __repr__(self):
        terms = ", ".join(str(c) for c in self.coeffs)
        return f"Series([{terms}], order={self.order}, var={self.var!r})"

    def _coerce(self, other):
        if isinstance(other, Series):
            if other.var != self.var:
                raise SeriesError(
                    f"incompatible variables {self.var!r} and {other.var!r}")
            return other
        return Series([other], self.order, self.var)

    def truncate(self, order):
        return Series(self.coeffs, min(order, self.order), self.var)

    def __add__(self, other):
        o = self._coerce(other)
        n = min(self.order, o.order)
        return Series([self.coeffs[k] + o.coeffs[k] for k in range(n + 1)],
                      n, self.var)

    __radd__ = __add__

    def __neg__(self):
        return Series([-c for c in self.coeffs], self.order, self.var)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Series):
            return Series([c * other for c in self.coeffs], self.order,
                          self.var)
        o = self._coerce(other)
        n = min(self.order, o.order)
        a, b = self.coeffs, o.coeffs
        # skip leading zeros, common in formal-mode corrections
        ia = next((i for i in range(n + 1) if not _is_zero(a[i])), n + 1)
        ib = next((i for i in range(n + 1) if not _is_zero(b[i])), n + 1)
        out = [0] * (n + 1)
        for i in range(ia, n + 1 - ib):
            ai = a[i]
            if _is_zero(ai):
                continue
            for j in range(ib, n + 1 - i):
                out[i + j] = out[i + j] + ai * b[j]
        return Series(out, n, self.var)

    def __rmul__(self, other):
        return Series([other * c for c in self.coeffs], self.order, self.var)

    def inverse(self):
        c0 = self.coeffs[0]
        if _is_zero(c0):
            raise SeriesError("series with zero constant term is not invertible")
        n = self.order
        inv0 = Fraction(1) / c0 if is_exact(c0) else 1.0 / c0
        out = [inv0]
        for k in range(1, n + 1):
            s = 0
            for j in range(1, k + 1):
                s = s + self.coeffs[j] * out[k - j]
            out.append(-s * inv0)
        return Series(out, n, self.var)

    def __truediv__(self, other):
        if isinstance(other, Series):
            return self * self._coerce(other).inverse()
        if is_exact(other):
            other = Fraction(other)
            return Series([c / other for c in self.coeffs], self.order,
                          self.var)
        return Series([c / other for c in self.coeffs], self.order, self.var)

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, k):
        if isinstance(k, int) and k >= 0:
            out = Series([1 if self.exact else 1.0], self.order, self.var)
            base = self
            while k:
                if k & 1:
                    out = out * base
                base = base * base
                k >>= 1
            return out
        if isinstance(k, int):
            return (self ** (-k)).inverse()
        return self.power(k)

    def power(self, r):
        """self**r for rational/real r; the constant term must be positive."""
        c0 = self.coeffs[0]
        if _is_zero(c0):
            raise SeriesError("non-integer power needs a nonzero constant term")
        if is_exact(c0) and isinstance(r, Fraction):
            lead = _exact_rational_power(c0, r)
        else:
            lead = float(c0) ** float(r)
        # (1+u)^r with u = self/c0 - 1, via the ODE f' (1+u) = r u' f
        u = self / c0
        n = self.order
        a = u.coeffs
        f = [lead]
        for k in range(1, n + 1):
            s = 0
            for j in range(1, k + 1):
                s = s + (r * j - (k - j)) * a[j] * f[k - j]
            f.append(s / k if not is_exact(s) else Fraction(s) / k)
        return Series(f, n, self.var)

    def sqrt(self):
        return self.power(Fraction(1, 2) if self.exact else 0.5)

    def compose(self, inner):
        """self(inner(x)); ``inner`` must have zero constant term."""
        inner = self._coerce(inner)
        if not _is_zero(inner.coeffs[0]):
            raise SeriesError("compose requires zero constant term in the inner series")
        n = min(self.order, inner.order)
        out = Series([self.coeffs[-1]], n, self.var)
        for c in reversed(self.coeffs[:-1]):
            out = out * inner + c
        return out

    def deriv(self):
        c = [k * self.coeffs[k] for k in range(1, self.order + 1)]
        return Series(c, max(self.order - 1, 0), self.var)

    def integral(self, c0=0):
        c = [c0] + [self.coeffs[k] / (k + 1) if not is_exact(self.coeffs[k])
                    else Fraction(self.coeffs[k]) / (k + 1)
                    for k in range(self.order + 1)]
        return Series(c, self.order + 1, self.var)

    def log(self):
        c0 = self.coeffs[0]
        if c0 != 1:
            raise SeriesError("log is only taken of series with constant term 1")
        d = self.deriv() * self.truncate(self.order - 1).inverse() if self.order else None
        if d is None:
            return Series([0], 0, self.var)
        return d.integral(0)

    def exp(self):
        if not _is_zero(self.coeffs[0]):
            raise SeriesError("exp is only taken of series with zero constant term")
        n = self.order
        a = self.coeffs
        f = [1 if self.exact else 1.0]
        for k in range(1, n + 1):
            s = 0
            for j in range(1, k + 1):
                s = s + j * a[j] * f[k - j]
            f.append(Fraction(s) / k if is_exact(s) else s / k)
        return Series(f, n, self.var)

    def __call__(self, x):
        out = 0
        for c in reversed(self.coeffs):
            out = out * x + c
        return out

    def __eq__(self, other):
        if isinstance(other, Series):
            return (self.var == other.var and self.order == other.order
                    and self.coeffs == other.coeffs)
        return NotImplemented

    def __hash__(self):
        return hash((self.coeffs, self.order, self.var))

    def to_float(self):
        return Series([float(c) for c in self.coeffs], self.order, self.var)

    def to_json(self):
        return {"series": [_scalar_json(c) for c in self.coeffs],
                "order": self.order, "variable": self.var}


def _exact_rational_power(c, r):
    c = Fraction(c)
    if c <= 0:
        raise SeriesError("rational power of a nonpositive constant")
    num = _int_root(c.numerator, r.denominator)
    den = _int_root(c.denominator, r.denominator)
    if num is None or den is None:
        raise SeriesError(f"{c}**{r} is irrational; use floating mode")
    return Fraction(num, den) ** r.numerator


def _int_root(n, k):
    r = round(n ** (1.0 / k))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand ** k == n:
            return cand
    return None


def _scalar_json(c):
    if isinstance(c, Fraction):
        return str(c)
    if isinstance(c, bool):
        return int(c)
    if isinstance(c, int):
        return str(c)
    if isinstance(c, Series):
        return c.to_json()
    if isinstance(c, complex):
        return [c.real, c.imag]
    return float(c)


def series_arith(a, b, op):
    """Binary series operation ``op`` in {add, sub, mul, div, compose}."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    if op == "compose":
        return a.compose(b)
    raise SeriesError(f"unknown op {op!r}")


class Poly:
    """Univariate polynomial with ascending coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = list(coeffs)
        while len(c) > 1 and _is_zero(c[-1]) and not isinstance(c[-1], Series):
            c.pop()
        if not c:
            c = [0]
        self.coeffs = tuple(c)

    @classmethod
    def x(cls):
        return cls([0, 1])

    @property
    def degree(self):
        if len(self.coeffs) == 1 and _is_zero(self.coeffs[0]):
            return -1
        return len(self.coeffs) - 1

    def __getitem__(self, k):
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else 0

    def __repr__(self):
        return f"Poly({list(self.coeffs)})"

    def _coerce(self, other):
        return other if isinstance(other, Poly) else Poly([other])

    def __add__(self, other):
        o = self._coerce(other)
        n = max(len(self.coeffs), len(o.coeffs))
        return Poly([self[k] + o[k] for k in range(n)])

    __radd__ = __add__

    def __neg__(self):
        return Poly([-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return Poly([c * other for c in self.coeffs])
        a, b = self.coeffs, other.coeffs
        out = [0] * (len(a) + len(b) - 1)
        for i, ai in enumerate(a):
            for j, bj in enumerate(b):
                out[i + j] = out[i + j] + ai * bj
        return Poly(out)

    def __rmul__(self, other):
        return Poly([other * c for c in self.coeffs])

    def __pow__(self, k):
        out = Poly([1])
        for _ in range(k):
            out = out * self
        return out

    def __call__(self, x):
        out = 0 * x if isinstance(x, np.ndarray) else 0
        for c in reversed(self.coeffs):
            out = out * x + c
        return out

    def deriv(self):
        if len(self.coeffs) == 1:
            return Poly([0])
        return Poly([k * self.coeffs[k] for k in range(1, len(self.coeffs))])

    def compose(self, other):
        other = self._coerce(other)
        out = Poly([self.coeffs[-1]])
        for c in reversed(self.coeffs[:-1]):
            out = out * other + c
        return out

    def norm(self):
        return max(abs(complex(c)) for c in self.coeffs) if self.coeffs else 0.0

    def to_float(self):
        return Poly([float(c) for c in self.coeffs])

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.coeffs == other.coeffs
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)


class LaurentPoly:
    """Finite Laurent polynomial sum_k c_k z^k (k may be negative)."""

    __slots__ = ("terms", "var")

    def __init__(self, terms=None, var="z"):
        t = {}
        for k, c in (terms or {}).items():
            t[int(k)] = c
        self.terms = t
        self.var = var

    @classmethod
    def monomial(cls, k, c=1, var="z"):
        return cls({k: c}, var)

    def __eq__(self, other):
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        nz = lambda t: {k: c for k, c in t.items() if c != 0}
        return self.var == other.var and nz(self.terms) == nz(other.terms)

    __hash__ = None

    def __getitem__(self, k):
        return self.terms.get(k, 0)

    def coeff(self, k):
        return self.terms.get(k, 0)

    def __repr__(self):
        items = ", ".join(f"{k}: {c}" for k, c in sorted(self.terms.items()))
        return f"LaurentPoly({{{items}}})"

    def _coerce(self, other):
        return other if isinstance(other, LaurentPoly) else LaurentPoly({0: other}, self.var)

    def __add__(self, other):
        o = self._coerce(other)
        t = dict(self.terms)
        for k, c in o.terms.items():
            t[k] = t[k] + c if k in t else c
        return LaurentPoly(t, self.var)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly({k: -c for k, c in self.terms.items()}, self.var)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, LaurentPoly):
            return LaurentPoly({k: c * other for k, c in self.terms.items()}, self.var)
        t = {}
        for i, a in self.terms.items():
            for j, b in other.terms.items():
                k = i + j
                t[k] = t[k] + a * b if k in t else a * b
        return LaurentPoly(t, self.var)

    def __rmul__(self, other):
        return LaurentPoly({k: other * c for k, c in self.terms.items()}, self.var)

    def __pow__(self, n):
        out = LaurentPoly({0: 1}, self.var)
        for _ in range(n):
            out = out * self
        return out

    def deriv(self):
        return LaurentPoly({k - 1: k * c for k, c in self.terms.items() if k != 0},
                           self.var)

    def residue(self):
        return self.terms.get(-1, 0)

    def __call__(self, z):
        out = 0
        for k, c in self.terms.items():
            out = out + c * z ** k
        return out

    def min_degree(self):
        return min(self.terms) if self.terms else 0

    def max_degree(self):
        return max(self.terms) if self.terms else 0


def laurent_residue(f):
    """Coefficient of z^-1."""
    return f.residue()


def poly_real_roots(p, interval, tol=1e-12, max_iter=200):
    """All real roots of ``p`` in ``interval``, ascending, multiplicity-collapsed.

    Splits the interval at the critical points (roots of p', found
    recursively) so each piece is monotone, then brackets sign changes with
    Brent's method. Touching roots are caught at the critical points.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if not lo < hi:
        raise RootFindingError(f"empty interval [{lo}, {hi}]")
    q = p.to_float()
    scale = 1.0 + q.norm()
    if q.degree <= 0:
        return []
    if q.degree == 1:
        r = -q[0] / q[1]
        return [r] if lo - tol <= r <= hi + tol else []
    crit = poly_real_roots(q.deriv(), (lo, hi), tol, max_iter)
    knots = [lo] + [c for c in crit if lo < c < hi] + [hi]
    roots = []
    for c in knots:
        if abs(q(c)) <= tol * scale:
            roots.append(c)
    for a, b in zip(knots[:-1], knots[1:]):
        fa, fb = q(a), q(b)
        if fa == 0.0 or fb == 0.0 or np.sign(fa) == np.sign(fb):
            continue
        try:
            r, info = brentq(q, a, b, xtol=tol * 1e-2, rtol=4 * np.finfo(float).eps,
                             maxiter=max_iter, full_output=True, disp=False)
        except ValueError as e:  # pragma: no cover - guarded by sign check
            raise RootFindingError(str(e), diagnostics={"bracket": (a, b)})
        if not info.converged:
            raise RootFindingError("brent iteration did not converge",
                                   last=r, diagnostics={"bracket": (a, b),
                                                        "values": (fa, fb)})
        roots.append(r)
    roots.sort()
    out = []
    for r in roots:
        if not out or abs(r - out[-1]) > tol:
            out.append(r)
    return out


def _fd_jacobian(F, x, f0, rel_step=1e-7):
    n = len(x)
    J = np.empty((len(f0), n))
    for i in range(n):
        h = rel_step * max(1.0, abs(x[i]))
        xp = x.copy()
        xp[i] += h
        xm = x.copy()
        xm[i] -= h
        J[:, i] = (np.asarray(F(xp), float) - np.asarray(F(xm), float)) / (2 * h)
    return J


def newton_system(F, x0, tol=1e-10, max_iter=50, jac=None):
    """Damped Newton for F(x)=0 with a central-difference Jacobian by default."""
    x = np.array(x0, dtype=float).ravel()
    f = np.asarray(F(x), float)
    for it in range(max_iter):
        if np.max(np.abs(f)) <= tol:
            return x
        J = jac(x) if jac is not None else _fd_jacobian(F, x, f)
        try:
            cond = np.linalg.cond(J)
            if not np.isfinite(cond) or cond > 1e15:
                raise np.linalg.LinAlgError
            dx = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError:
            raise SingularJacobianError("singular Jacobian in Newton iteration",
                                        last=x, diagnostics={"iteration": it})
        lam = 1.0
        norm0 = np.max(np.abs(f))
        while True:
            xn = x + lam * dx
            try:
                fn = np.asarray(F(xn), float)
                ok = np.all(np.isfinite(fn))
            except (ValueError, ZeroDivisionError, FloatingPointError):
                ok = False
            if ok and (np.max(np.abs(fn)) < norm0 or lam < 1e-3):
                break
            lam *= 0.5
            if lam < 1e-6:
                raise ConvergenceError("line search failed", last=x,
                                       diagnostics={"iteration": it, "residual": norm0})
        x, f = xn, fn
    if np.max(np.abs(f)) <= tol:
        return x
    raise ConvergenceError(f"Newton did not converge in {max_iter} iterations",
                           last=x, diagnostics={"residual": float(np.max(np.abs(f)))})


def fraction_solve(A, b):
    """Solve A x = b by Gaussian elimination over any exact field.

    ``b`` entries may be vectors of anything supporting scalar multiplication
    and addition (e.g. Series), which is how formal Newton steps are applied.
    """
    n = len(A)
    M = [list(map(Fraction, row)) for row in A]
    rhs = list(b)
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            raise SingularJacobianError("singular exact system")
        M[col], M[piv] = M[piv], M[col]
        rhs[col], rhs[piv] = rhs[piv], rhs[col]
        inv = 1 / M[col][col]
        M[col] = [v * inv for v in M[col]]
        rhs[col] = rhs[col] * inv
        for r in range(n):
            if r != col and M[r][col] != 0:
                fac = M[r][col]
                M[r] = [a - fac * c for a, c in zip(M[r], M[col])]
                rhs[r] = rhs[r] - rhs[col] * fac
    return rhs
