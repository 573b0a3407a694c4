"""Cylinder correlators, genus-one moments, topological recursion, free energies.

Everything is written in the rescaled Zhukovsky variable w = gamma*z, where

    x(w) = w + alpha + q/w,  sigma(w) = q/w,  branch points w = +-gamma,

so all genus-0 data are polynomial in (alpha, q) and exact in formal mode.

Bi-trace couplings enter the cylinder through an RPA-type resummation:
with K the universal (Bergman) cylinder of the effective curve and
B_ij = 2 t_ij/(i+j) on the bi-trace indices S,

    T0_{l,m} = K_{l,m} - K_{l,S} B (1 + K_{SS} B)^{-1} K_{S,m}.

Genus-one moments are obtained from a pole ansatz for W^1 dx (poles at the
branch points up to order 4, plus poles at w = 0 produced by the blobs)
fixed by the genus-one loop equations. The classical recursion on the
effective curve is also provided; off single-trace models its output is
tagged ``general-coupling-unverified``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.linalg

from .errors import ConfigError, IllConditionedError, SingularJacobianError
from .loop_equations import CorrelatorTable, sde_residual
from .series import LaurentPoly, Series
from .spectral import (_moment, _nonzero, _x_powers,
                       solve_one_cut)

__all__ = ["CorrelatorForm", "w2_universal", "universal_mixed_moment", "mixed_moment",
           "cylinder_matrix", "genus_one_moments", "topological_recursion",
           "tr_moments", "correlator_table", "free_energy_series", "free_energy_closed",
           "generic_solve"]

EXACT_TAG = "exact-single-trace-reduction"
UNVERIFIED_TAG = "general-coupling-unverified"
MAX_EULER = 1  # 2g - 2 + n bound for the numeric recursion


# --- generic linear algebra ------------------------------------------------

def _c0(c):
    if isinstance(c, Series):
        return complex(float(c.coeffs[0]) if c.coeffs else 0.0)
    return complex(c)


def generic_solve(A, b):
    """Solve a square system over Fractions, floats or Series.

    Pivots on the largest constant term, so Series systems must be
    invertible at the expansion point.
    """
    n = len(A)
    M = [list(r) for r in A]
    rhs = list(b)
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(_c0(M[r][col])))
        if abs(_c0(M[piv][col])) == 0:
            raise SingularJacobianError("singular system at the expansion point")
        M[col], M[piv] = M[piv], M[col]
        rhs[col], rhs[piv] = rhs[piv], rhs[col]
        inv = 1 / M[col][col]
        M[col] = [v * inv for v in M[col]]
        rhs[col] = rhs[col] * inv
        for r in range(n):
            if r != col and _nonzero(M[r][col]):
                f = M[r][col]
                M[r] = [a - f * c for a, c in zip(M[r], M[col])]
                rhs[r] = rhs[r] - rhs[col] * f
    return rhs


def _independent_rows(A, ncols):
    A0 = np.array([[_c0(c) for c in row] for row in A])
    if A0.shape[0] < ncols:
        raise SingularJacobianError("fewer equations than unknowns")
    _, R, piv = scipy.linalg.qr(A0.T, pivoting=True)
    d = np.abs(np.diag(R))
    rank = int(np.sum(d > 1e-11 * d[0])) if d.size else 0
    if rank < ncols:
        raise SingularJacobianError(f"ansatz underdetermined: rank {rank} < {ncols}")
    return sorted(piv[:ncols].tolist())


# --- cylinders --------------------------------------------------------------

def _sol_cache(sol):
    c = sol.__dict__.get("_rec_cache")
    if c is None:
        c = {}
        sol.__dict__["_rec_cache"] = c
    return c


def _xp(sol, n):
    cache = _sol_cache(sol)
    xp = cache.get("xp")
    if xp is None or len(xp) <= n:
        xp = _x_powers(sol.alpha, sol.q, max(n, 4))
        cache["xp"] = xp
    return xp


def universal_mixed_moment(sol, l1, l2):
    """Double residue of x1^l1 x2^l2 / (w1-w2)^2 in |w1| > |w2|."""
    if l1 == 0 or l2 == 0:
        return 0
    xp = _xp(sol, max(l1, l2))
    acc = 0
    for n in range(1, l1 + 1):
        a = xp[l1].terms.get(n)
        b = xp[l2].terms.get(-n)
        if a is not None and b is not None:
            acc = acc + n * a * b
    return acc


def _blob(sol):
    """(S, Q) with Q = B (1 + K_SS B)^{-1} on the bi-trace indices S."""
    cache = _sol_cache(sol)
    if "blob" in cache:
        return cache["blob"]
    p = sol.potential
    S = p.bi_indices
    if not S:
        cache["blob"] = ((), None)
        return cache["blob"]
    Bd = p.b_matrix()
    B = [[Bd.get((i, j), 0) for j in S] for i in S]
    K = [[universal_mixed_moment(sol, i, j) for j in S] for i in S]
    n = len(S)
    # X = (1 + K B)^{-1}, column by column; Q = B X
    IKB = [[(1 if r == c else 0) + sum(K[r][k] * B[k][c] for k in range(n))
            for c in range(n)] for r in range(n)]
    cols = []
    for c in range(n):
        e = [1 if r == c else 0 for r in range(n)]
        cols.append(generic_solve(IKB, e))
    X = [[cols[c][r] for c in range(n)] for r in range(n)]
    Q = [[sum(B[r][k] * X[k][c] for k in range(n)) for c in range(n)] for r in range(n)]
    cache["blob"] = (S, Q)
    return cache["blob"]


def mixed_moment(sol, l1, l2, blob=True):
    """T0_{l1,l2}: universal cylinder, resummed over the bi-trace couplings."""
    K = universal_mixed_moment(sol, l1, l2)
    if not blob:
        return K
    S, Q = _blob(sol)
    if not S:
        return K
    k1 = [universal_mixed_moment(sol, l1, i) for i in S]
    k2 = [universal_mixed_moment(sol, j, l2) for j in S]
    for a in range(len(S)):
        for b in range(len(S)):
            if _nonzero(Q[a][b]) and _nonzero(k1[a]) and _nonzero(k2[b]):
                K = K - k1[a] * Q[a][b] * k2[b]
    return K


def cylinder_matrix(sol, lmax, blob=True):
    return {(l1, l2): mixed_moment(sol, l1, l2, blob)
            for l1 in range(1, lmax + 1) for l2 in range(l1, lmax + 1)}


# --- correlator forms -------------------------------------------------------

@dataclass
class CorrelatorForm:
    """omega_{g,n} as a function of Zhukovsky variables z_1..z_n.

    ``__call__`` returns the coefficient of dz_1...dz_n.
    """

    g: int
    n: int
    fn: object
    gamma: float
    tag: str = EXACT_TAG
    meta: dict = field(default_factory=dict)

    def __call__(self, *z):
        if len(z) != self.n:
            raise ValueError(f"expected {self.n} arguments")
        w = [self.gamma * complex(zi) for zi in z]
        return self.fn(*w) * self.gamma ** self.n


def w2_universal(m):
    """W2 x'(z1) x'(z2) = 1/(z1-z2)^2 - x'(z1)x'(z2)/(x(z1)-x(z2))^2."""
    alpha, gamma = complex(m.alpha), float(m.gamma)

    def x(z):
        return alpha + gamma * (z + 1 / z)

    def dx(z):
        return gamma * (1 - 1 / z ** 2)

    def f(z1, z2):
        z1, z2 = complex(z1), complex(z2)
        return 1 / (z1 - z2) ** 2 - dx(z1) * dx(z2) / (x(z1) - x(z2)) ** 2

    form = CorrelatorForm(0, 2, None, 1.0, "universal")
    form.fn = f
    return form


# --- genus one from the loop equations -------------------------------------

def _ansatz_columns(sol, P, depth):
    """Expansions at w = infinity of the ansatz basis, truncated at w^-depth."""
    q = sol.q
    cols = []
    labels = []
    for k in range(1, 5):
        for shift in (0, 1):
            terms = {}
            m = 0
            while 2 * k + 2 * m - shift <= depth:
                c = math.comb(m + k - 1, k - 1)
                terms[-(2 * k + 2 * m) + shift] = c * (q ** m if m else 1)
                m += 1
            cols.append(LaurentPoly(terms, "w"))
            labels.append(("branch", k, shift))
    for k in range(1, P + 1):
        cols.append(LaurentPoly({-k: 1}, "w"))
        labels.append(("origin", k))
    return cols, labels


class _Table(CorrelatorTable):
    """CorrelatorTable whose genus-one one-point entries come from a vector."""

    def __init__(self, base, t1):
        super().__init__(dict(base.entries), base.hooft_t, base.meta)
        self.t1 = t1

    def get(self, g, lengths):
        if g == 1 and len(lengths) == 1 and lengths[0] > 0:
            l = lengths[0]
            if l >= len(self.t1):
                from .errors import CoverageError
                raise CoverageError((1, (l,)))
            return self.t1[l]
        return super().get(g, lengths)


def _genus0_table(sol, lmax, cyl_max, blob=True):
    tab = CorrelatorTable({}, sol.hooft_t, {})
    mom = sol.moments(lmax)
    for l in range(1, lmax + 1):
        tab.set(0, (l,), mom[l])
    for l1 in range(1, lmax + 1):
        for l2 in range(1, min(l1, cyl_max) + 1):
            tab.set(0, (l2, l1), mixed_moment(sol, l2, l1, blob))
    return tab


def genus_one_moments(sol, lmax=8, return_info=False):
    """T1_l for l <= lmax from the pole ansatz fixed by the genus-one loop equations."""
    p = sol.potential
    d = max(p.degree, 2)
    P = (max(p.bi_indices) + 2) if p.bi_indices else 2
    nu = 8 + P
    # enough equations (l1 = 0..L-d+1, plus T1_0 = 0) to over-determine the ansatz
    L = max(lmax + d + 2, nu + d + 2)
    depth = L + 2
    cols, labels = _ansatz_columns(sol, P, depth)
    xp = _xp(sol, L + d)
    A = [[_moment(xp[l], cols[u]) if l else cols[u].coeff(-1) for u in range(nu)]
         for l in range(L + 1)]
    base = _genus0_table(sol, L + d, L + d)
    zero = [0] * (L + 1)

    def t1_of(c):
        return [sum((A[l][u] * c[u] for u in range(nu) if _nonzero(c[u]) and _nonzero(A[l][u])), 0)
                for l in range(L + 1)]

    rows, rhs = [], []
    # T1_0 = 0
    rows.append([A[0][u] for u in range(nu)])
    rhs.append(0)
    unit_t1 = []
    for u in range(nu):
        e = [0] * nu
        e[u] = 1
        unit_t1.append(t1_of(e))
    for l1 in range(0, L - d + 2):
        r0 = sde_residual(p, _Table(base, zero), 1, l1, ())
        row = [sde_residual(p, _Table(base, unit_t1[u]), 1, l1, ()) - r0 for u in range(nu)]
        rows.append(row)
        rhs.append(-r0)
    idx = _independent_rows(rows, nu)
    c = generic_solve([rows[i] for i in idx], [rhs[i] for i in idx])
    t1 = t1_of(c)
    out = {l: t1[l] for l in range(1, lmax + 1)}
    if not return_info:
        return out
    resid = []
    for r, b in zip(rows, rhs):
        v = sum((r[u] * c[u] for u in range(nu)), 0) - b
        resid.append(abs(_c0(v)))
    return out, {"labels": labels, "coefficients": c, "max_row_residual": max(resid),
                 "equations": len(rows), "unknowns": nu}


# --- topological recursion on the effective curve -------------------------

def _numeric_curve(sol):
    s = sol if sol.mode == "numeric" else sol.to_float()
    alpha, q = float(s.alpha), float(s.q)
    v = np.array([float(c) for c in s.v])
    gamma = math.sqrt(q)
    return alpha, q, gamma, v


def _y(w, q, v):
    # y = (V'(x) - 2W(x))/2 = (1/2) sum_k v_k (w^k - q^k w^-k)
    out = 0
    for k in range(1, len(v)):
        if v[k]:
            out = out + 0.5 * v[k] * (w ** k - q ** k * w ** (-k))
    return out


def _other_zeros(q, v):
    """Zeros of w^D y(w) besides the branch points and the origin."""
    D = len(v) - 1
    # polynomial in w of degree 2D: sum_k v_k (w^{D+k} - q^k w^{D-k}) / 2
    c = np.zeros(2 * D + 1)
    for k in range(1, D + 1):
        c[D + k] += 0.5 * v[k]
        c[D - k] -= 0.5 * v[k] * q ** k
    r = np.roots(c[::-1]) if np.any(c) else np.array([])
    g = math.sqrt(q)
    return [z for z in r if min(abs(z - g), abs(z + g)) > 1e-6 * g and abs(z) > 1e-12]


def _contours(q, v, avoid=(), npts=256):
    g = math.sqrt(q)
    others = list(_other_zeros(q, v)) + [0.0] + list(avoid)
    out = []
    for b in (g, -g):
        dist = min([abs(b - o) for o in others] + [2 * g])
        r = 0.4 * dist
        th = 2 * np.pi * np.arange(npts) / npts
        w = b + r * np.exp(1j * th)
        dw = 1j * r * np.exp(1j * th) * (2 * np.pi / npts)
        out.append((w, dw, r, dist))
    return out


def _check_conditioning(vals, dw, result, r, gamma, what):
    mag = float(np.max(np.abs(vals * dw))) * len(dw)
    cond = mag / max(abs(result), 1e-300)
    if cond > 1e10 or r < 1e-6 * gamma:
        raise IllConditionedError(
            f"{what}: residue at a branch point is ill-conditioned "
            f"(condition ~{cond:.2e}, contour radius {r:.2e}); near-critical pole coalescence")
    return cond


def _pplus(xpl):
    """Non-negative part of x^l as a numpy-callable polynomial in w."""
    deg = max([k for k in xpl.terms if k >= 0], default=0)
    c = np.zeros(deg + 1, dtype=complex)
    for k, a in xpl.terms.items():
        if k >= 0:
            c[k] = complex(a)
    return np.polynomial.Polynomial(c)


# Overall normalization of the kernel; fixed once by the Gaussian genus-one
# moment T1_4 = 1 and cross-checked by T0_{2,2,2} against the Wick oracle.
_KERNEL_NORM = -1.0


def _kernel_factor(w, q, alpha, v):
    dx = 1 - q / w ** 2
    return _KERNEL_NORM * 0.5 / (2 * _y(w, q, v) * dx)


def _tag(sol):
    return EXACT_TAG if sol.potential.is_single_trace() else UNVERIFIED_TAG


def topological_recursion(sol, g, n):
    """omega_{g,n} on the effective curve for 2g-2+n = 1, evaluated numerically."""
    if 2 * g - 2 + n <= 0:
        raise ConfigError("recursion needs 2g-2+n > 0")
    if 2 * g - 2 + n > MAX_EULER:
        raise ConfigError(f"2g-2+n = {2 * g - 2 + n} exceeds the configured bound {MAX_EULER}")
    alpha, q, gamma, v = _numeric_curve(sol)

    def sig(w):
        return q / w

    def B(a, b):
        return 1 / (a - b) ** 2

    if (g, n) == (1, 1):
        def f(w0):
            tot = 0j
            for w, dw, r, dist in _contours(q, v, avoid=(w0, sig(w0))):
                ker = _kernel_factor(w, q, alpha, v) * (1 / (w0 - w) - 1 / (w0 - sig(w)))
                vals = ker * (-q) / (w ** 2 - q) ** 2
                tot += np.sum(vals * dw) / (2j * np.pi)
            return tot
    else:
        def f(w0, w1, w2):
            tot = 0j
            for w, dw, r, dist in _contours(q, v, avoid=(w0, sig(w0), w1, sig(w1), w2, sig(w2))):
                ker = _kernel_factor(w, q, alpha, v) * (1 / (w0 - w) - 1 / (w0 - sig(w)))
                ds = -q / w ** 2
                vals = ker * (B(w, w1) * B(sig(w), w2) + B(w, w2) * B(sig(w), w1)) * ds
                tot += np.sum(vals * dw) / (2j * np.pi)
            return tot
    return CorrelatorForm(g, n, f, gamma, _tag(sol))


def tr_moments(sol, g, n, lmax, check=True):
    """Moments of omega_{g,n} (n = 1 at g = 1, n = 3 at g = 0) by residues at the branch points."""
    if (g, n) not in ((1, 1), (0, 3)):
        raise ConfigError("tr_moments supports (g,n) = (1,1) and (0,3)")
    alpha, q, gamma, v = _numeric_curve(sol)
    xp = _x_powers(alpha, q, lmax)
    P = [_pplus(xp[l]) for l in range(lmax + 1)]
    dP = [p.deriv() for p in P]
    out = {}
    conds = []
    for w, dw, r, dist in _contours(q, v):
        s = q / w
        ker = _kernel_factor(w, q, alpha, v)
        ds = -q / w ** 2
        Pw = [p(w) for p in P]
        Ps = [p(s) for p in P]
        if (g, n) == (1, 1):
            base = ker * (-q) / (w ** 2 - q) ** 2
            for l in range(1, lmax + 1):
                vals = base * (Pw[l] - Ps[l])
                res = np.sum(vals * dw) / (2j * np.pi)
                out[(l,)] = out.get((l,), 0) + res
                if check:
                    conds.append(float(np.max(np.abs(vals))) * r / max(abs(res), 1e-300))
        else:
            dPw = [p(w) for p in dP]
            dPs = [p(s) for p in dP]
            for l0 in range(1, lmax + 1):
                for l1 in range(l0, lmax + 1):
                    for l2 in range(l1, lmax + 1):
                        # kernel index is l0; the pairing is symmetric in (l1, l2)
                        vals = ker * (Pw[l0] - Ps[l0]) * (dPw[l1] * dPs[l2] + dPw[l2] * dPs[l1]) * ds
                        res = np.sum(vals * dw) / (2j * np.pi)
                        out[(l0, l1, l2)] = out.get((l0, l1, l2), 0) + res
        if r < 1e-6 * gamma:
            raise IllConditionedError(f"contour radius {r:.2e}: branch point nearly collides "
                                      "with another zero of y")
    res = {k: float(np.real(v)) for k, v in out.items()}
    return res


# --- tables -----------------------------------------------------------------

def correlator_table(sol, gmax=1, nmax=2, lmax=8, include_tr3=False):
    """Genus-0 one- and two-point data and genus-1 one-point data, certified by the SDEs.

    Lengths run up to ``lmax + degree`` so every equation with l1 <= lmax is
    covered. ``include_tr3`` adds T0 with three boundaries from the recursion
    (single-trace potentials only).
    """
    if gmax > 1:
        raise ConfigError("correlator tables are limited to genus <= 1")
    d = max(sol.potential.degree, 2)
    L = lmax + d
    tab = _genus0_table(sol, L, L if nmax >= 2 else 0)
    if nmax < 2:
        tab.entries = {k: v for k, v in tab.entries.items() if len(k[1]) == 1}
    if gmax >= 1:
        t1 = genus_one_moments(sol, L)
        for l, val in t1.items():
            tab.set(1, (l,), val)
    if include_tr3 or nmax >= 3:
        if not sol.potential.is_single_trace():
            raise ConfigError("three-boundary data come from the recursion and are only "
                              "certified for single-trace potentials")
        m3 = tr_moments(sol, 0, 3, lmax + d - 1)
        for key, val in m3.items():
            tab.set(0, key, val)
    tab.meta = {"mode": sol.mode, "lmax": lmax, "gmax": gmax, "nmax": nmax,
                "tag": EXACT_TAG if sol.potential.is_single_trace() else "blob-resummed"}
    return tab


# --- free energies ------------------------------------------------------------

def _derivative_direction(p):
    """Coefficient of eps in every eps-scaled coupling (all but Gaussian and (1,1))."""
    st = {i: c for i, c in p.single_trace.items()}
    bt = {k: c for k, c in p.bi_trace.items() if k != (1, 1)}
    return st, bt


def free_energy_series(p, g=0, order=10, var="eps"):
    """F_g(eps) for the family where every non-Gaussian coupling of ``p`` is scaled by eps.

    dF/deps = -<dS/deps> collected at N^(2-2g); F_g(0) = 0 relative to the Gaussian.
    """
    if g not in (0, 1):
        raise ConfigError("free energies are provided for g = 0 and g = 1")
    if p.hooft_t != 1:
        raise ConfigError("free energies are assembled at hooft_t = 1")
    st, bt = _derivative_direction(p)
    if not st and not bt:
        return Series([0], order, var)
    sol = solve_one_cut(p, mode="formal", order=order, var=var)
    if g == 1:
        return free_energy_closed(sol, 1)
    d = max(p.degree, 2)
    T = sol.moments(d)
    acc = 0
    for i, c in st.items():
        acc = acc + T[i] * (Fraction(c) / i)
    for (i, j), c in bt.items():
        mult = 1 if i == j else 2
        acc = acc + T[i] * T[j] * (mult * Fraction(c) / (i + j))
    dF = -acc
    if not isinstance(dF, Series):
        dF = Series([dF], order, var)
    return _integrate(dF, order, var)


def _integrate(s, order, var):
    c = [0] + [s.coeffs[k] / (k + 1) if k < len(s.coeffs) else 0 for k in range(order)]
    return Series(c, order, var)


def free_energy_closed(sol, g=1):
    """F_1 = -(1/24) log(q^2 M(a) M(b)) - (1/2) log det(1 + K_SS B), relative to eps = 0."""
    if g != 1:
        raise ConfigError("closed form provided for g = 1 only")
    M = sol.edge_poly
    q = sol.q
    # M(a) M(b) without square roots: a, b = alpha +- 2 gamma, (x - alpha)^2 = 4q at both
    Mc = M.compose(_shift(sol.alpha)) if _nonzero(sol.alpha) else M
    even = sum((c * (4 * q) ** (k // 2) for k, c in enumerate(Mc.coeffs) if k % 2 == 0), 0)
    odd = sum((c * (4 * q) ** ((k - 1) // 2) for k, c in enumerate(Mc.coeffs) if k % 2 == 1), 0)
    prod = even * even - odd * odd * 4 * q
    arg = q * q * prod
    S, Q = _blob(sol)
    det = 1
    if S:
        p = sol.potential
        Bd = p.b_matrix()
        n = len(S)
        K = [[universal_mixed_moment(sol, i, j) for j in S] for i in S]
        IKB = [[(1 if r == c else 0) + sum(K[r][k] * Bd.get((S[k], S[c]), 0) for k in range(n))
                for c in range(n)] for r in range(n)]
        det = _det(IKB)
    F1 = _log_norm(arg) * Fraction(-1, 24)
    return F1 - _log_norm(det) * Fraction(1, 2) if S else F1


def _shift(alpha):
    from .series import Poly
    return Poly([alpha, 1])


def _det(M):
    n = len(M)
    M = [list(r) for r in M]
    det = 1
    for c in range(n):
        piv = max(range(c, n), key=lambda r: abs(_c0(M[r][c])))
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            det = -det
        det = det * M[c][c]
        inv = 1 / M[c][c]
        for r in range(c + 1, n):
            f = M[r][c] * inv
            M[r] = [a - f * b for a, b in zip(M[r], M[c])]
    return det


def _log_norm(x):
    """log(x / x(0)) for a Series, or log of a positive float."""
    if isinstance(x, Series):
        c0 = x.coeffs[0]
        return (x * (1 / c0)).log()
    return math.log(x)
