"""Hot loops: labelled-pairing enumeration and single-entry Metropolis.

Every kernel is written once in numba-compatible Python. ``*_nb`` is the
jitted version, ``*_py`` the interpreted one (pairings also get a
vectorized numpy variant). ``pairing_face_histogram`` and
``metropolis_chain`` dispatch on the DIRACENS_DISABLE_NUMBA flag.
"""
import numpy as np

from ._accel import HAS_NUMBA, njit

_JIT = dict(cache=True, error_model="numpy", fastmath=True)


# --- pairings ---------------------------------------------------------------

def _succ_perm(lengths):
    """gamma: next half-edge around the same trace."""
    D = int(np.sum(lengths))
    g = np.empty(D, np.int64)
    pos = 0
    for k in lengths:
        for a in range(k):
            g[pos + a] = pos + (a + 1) % k
        pos += k
    return g


def _pairing_hist(gamma, D):
    """hist[f] = number of pairings whose gamma∘pi has f cycles."""
    hist = np.zeros(D + 1, np.int64)
    if D == 0:
        hist[0] = 1
        return hist
    if D % 2:
        return hist
    half = D // 2
    radix = np.empty(half, np.int64)
    total = 1
    for s in range(half):
        radix[s] = D - 2 * s - 1
        total *= radix[s]
    pi = np.empty(D, np.int64)
    free = np.empty(D, np.int64)
    seen = np.zeros(D, np.uint8)
    for idx in range(total):
        for a in range(D):
            free[a] = a
        nfree = D
        rem = idx
        for s in range(half):
            c = rem % radix[s]
            rem //= radix[s]
            a = free[0]
            b = free[1 + c]
            pi[a] = b
            pi[b] = a
            # drop positions 0 and 1+c from the free list
            m = 0
            for t in range(nfree):
                if t != 0 and t != 1 + c:
                    free[m] = free[t]
                    m += 1
            nfree = m
        for a in range(D):
            seen[a] = 0
        cyc = 0
        for a in range(D):
            if seen[a] == 0:
                cyc += 1
                x = a
                while seen[x] == 0:
                    seen[x] = 1
                    x = gamma[pi[x]]
        hist[cyc] += 1
    return hist


_pairing_hist_py = _pairing_hist
_pairing_hist_nb = njit(**_JIT)(_pairing_hist) if HAS_NUMBA else None


def _all_pairings_numpy(D):
    """(D-1)!! x D array of involutions, built by vectorized recursion."""
    if D == 0:
        return np.zeros((1, 0), np.int64)
    rows = np.zeros((1, D), np.int64)
    free = np.tile(np.arange(D), (1, 1))
    for s in range(D // 2):
        nf = free.shape[1]
        c = np.arange(1, nf)
        nrow = rows.shape[0]
        rows = np.repeat(rows, nf - 1, axis=0)
        fr = np.repeat(free, nf - 1, axis=0)
        ch = np.tile(c, nrow)
        a = fr[:, 0]
        b = fr[np.arange(len(ch)), ch]
        r = np.arange(len(ch))
        rows[r, a] = b
        rows[r, b] = a
        keep = np.ones(fr.shape, bool)
        keep[:, 0] = False
        keep[r, ch] = False
        free = fr[keep].reshape(len(ch), nf - 2)
    return rows


def pairing_face_histogram_numpy(lengths):
    gamma = _succ_perm(np.asarray(lengths, np.int64))
    D = len(gamma)
    hist = np.zeros(D + 1, np.int64)
    if D % 2:
        return hist
    P = _all_pairings_numpy(D)
    sigma = gamma[P]                       # gamma∘pi, row-wise
    # count cycles: an element starts a cycle iff it is the minimum of its orbit
    cur = np.tile(np.arange(D), (len(P), 1))
    mn = cur.copy()
    rows = np.arange(len(P))[:, None]
    for _ in range(D):
        cur = sigma[rows, cur]
        np.minimum(mn, cur, out=mn)
    cyc = np.sum(mn == np.arange(D), axis=1)
    np.add.at(hist, cyc, 1)
    return hist


def pairing_face_histogram(lengths, backend=None):
    """Histogram over labelled pairings of the face count of the glued map."""
    backend = backend or ("numba" if HAS_NUMBA else "numpy")
    lengths = np.asarray([l for l in lengths], np.int64)
    if backend == "numpy":
        return pairing_face_histogram_numpy(lengths)
    gamma = _succ_perm(lengths)
    f = _pairing_hist_nb if backend == "numba" else _pairing_hist_py
    return f(gamma, len(gamma))


# --- Metropolis ---------------------------------------------------------------

def compositions_table(K):
    """Flattened compositions of k-r into r parts, for 1 <= r <= k <= K."""
    ks, rs, starts, parts = [], [], [], []
    for k in range(1, K + 1):
        for r in range(1, k + 1):
            stack = [[]]
            out = []
            while stack:
                c = stack.pop()
                if len(c) == r:
                    if sum(c) == k - r:
                        out.append(c)
                    continue
                for m in range(k - r - sum(c) + 1):
                    stack.append(c + [m])
            for c in out:
                ks.append(k)
                rs.append(r)
                starts.append(len(parts))
                parts.extend(c)
    return (np.array(ks, np.int64), np.array(rs, np.int64),
            np.array(starts, np.int64), np.array(parts, np.int64))


def _hm_entry(H, H2, m, a, b, N):
    if m == 0:
        return 1.0 + 0j if a == b else 0j
    if m == 1:
        return H[a, b]
    if m == 2:
        return H2[a, b]
    s = 0j
    if m == 3:
        for k in range(N):
            s += H2[a, k] * H[k, b]
        return s
    if m == 4:
        for k in range(N):
            s += H2[a, k] * H2[k, b]
        return s
    # m == 5: (H^2 H^3)_{ab}
    for k in range(N):
        h3 = 0j
        for l in range(N):
            h3 += H2[k, l] * H[l, b]
        s += H2[a, k] * h3
    return s


def _delta_powers(H, H2, N, i, j, c0, c1, K, ks, rs, starts, parts, dp, A):
    """dp[k] = tr(H+Delta)^k - tr H^k for Delta = c0 e_i e_j^T + c1 e_j e_i^T.

    A[m] holds the 2x2 compression V^T H^m U with U = [e_i, e_j], V = [e_j, e_i].
    """
    for m in range(K):
        A[m, 0, 0] = _hm_entry(H, H2, m, j, i, N)
        A[m, 0, 1] = _hm_entry(H, H2, m, j, j, N)
        A[m, 1, 0] = _hm_entry(H, H2, m, i, i, N)
        A[m, 1, 1] = _hm_entry(H, H2, m, i, j, N)
    for k in range(K + 1):
        dp[k] = 0.0
    for t in range(len(ks)):
        k = ks[t]
        r = rs[t]
        s = starts[t]
        # running product P = C A_{m1} C A_{m2} ...
        p00 = 1.0 + 0j
        p01 = 0j
        p10 = 0j
        p11 = 1.0 + 0j
        for u in range(r):
            m = parts[s + u]
            # multiply by C = diag(c0, c1) then A[m]
            a00 = c0 * A[m, 0, 0]
            a01 = c0 * A[m, 0, 1]
            a10 = c1 * A[m, 1, 0]
            a11 = c1 * A[m, 1, 1]
            n00 = p00 * a00 + p01 * a10
            n01 = p00 * a01 + p01 * a11
            n10 = p10 * a00 + p11 * a10
            n11 = p10 * a01 + p11 * a11
            p00, p01, p10, p11 = n00, n01, n10, n11
        dp[k] += (k / r) * (p00 + p11).real


def _diag_delta_powers(H, H2, N, i, d, K, ks, rs, starts, parts, dp, hm):
    """Same for Delta = d e_i e_i^T (scalar compression)."""
    for m in range(K):
        hm[m] = _hm_entry(H, H2, m, i, i, N).real
    for k in range(K + 1):
        dp[k] = 0.0
    for t in range(len(ks)):
        k = ks[t]
        r = rs[t]
        s = starts[t]
        prod = 1.0
        for u in range(r):
            prod *= d * hm[parts[s + u]]
        dp[k] += (k / r) * prod


def _fast_off(H, H2, N, i, j, c0, c1, h3ji, K, dp):
    """Closed-form dp_k (k <= 4) for Delta = c0 E_ij + c1 E_ji, i != j."""
    hij = H[i, j]
    hji = H[j, i]
    hii = H[i, i].real
    hjj = H[j, j].real
    cc = (c0 * c1).real
    dp[1] = 0.0
    dp[2] = 2.0 * (c0 * hji + c1 * hij).real + 2.0 * cc
    if K >= 3:
        dp[3] = 3.0 * (c0 * H2[j, i] + c1 * H2[i, j]).real + 3.0 * cc * (hii + hjj)
    if K >= 4:
        h3ij = np.conj(h3ji)
        t1 = (c0 * h3ji + c1 * h3ij).real
        t2 = cc * (H2[i, i].real + H2[j, j].real)
        t3 = (c0 * c0 * hji * hji + c1 * c1 * hij * hij).real + 2.0 * cc * hii * hjj
        t4 = cc * (c0 * hji + c1 * hij).real
        dp[4] = 4.0 * t1 + 4.0 * t2 + 2.0 * t3 + 4.0 * t4 + 2.0 * cc * cc


def _fast_diag(H, H2, N, i, d, K, dp):
    hii = H[i, i].real
    dp[1] = d
    dp[2] = 2.0 * d * hii + d * d
    if K >= 3:
        gii = H2[i, i].real
        dp[3] = 3.0 * d * gii + 3.0 * d * d * hii + d * d * d
    if K >= 4:
        h3 = 0.0
        for k in range(N):
            h3 += (H2[i, k] * H[k, i]).real
        dp[4] = (4.0 * d * h3 + 4.0 * d * d * gii + 2.0 * d * d * hii * hii
                 + 4.0 * d * d * d * hii + d ** 4)


def _h3_entry(H, H2, N, a, b):
    # (H^3)_{ab} = sum_k H2[a,k] conj(H[b,k]); both rows are contiguous
    sr = 0.0
    si = 0.0
    for k in range(N):
        g = H2[a, k]
        h = H[b, k]
        sr += g.real * h.real + g.imag * h.imag
        si += g.imag * h.real - g.real * h.imag
    return sr + 1j * si


def _delta_action(a, b, p, dp, K):
    dS = 0.0
    for k in range(1, K + 1):
        dS += a[k] * dp[k]
    for i in range(1, K + 1):
        for j in range(1, K + 1):
            if b[i, j] != 0.0:
                dS += b[i, j] * ((p[i] + dp[i]) * (p[j] + dp[j]) - p[i] * p[j])
    return dS


def _recompute(H, H2, p, N, K, need_h2):
    """Exact refresh of H2 and the power sums, clearing incremental drift."""
    if need_h2:
        H2[:, :] = np.dot(H, H)
    p[0] = N
    tr1 = 0.0
    tr2 = 0.0
    for r in range(N):
        tr1 += H[r, r].real
        for c in range(N):
            tr2 += (H[r, c] * H[c, r]).real
    p[1] = tr1
    if K >= 2:
        p[2] = tr2
    if K >= 3:
        s3 = 0.0
        s4 = 0.0
        for r in range(N):
            for c in range(N):
                s3 += (H2[r, c] * H[c, r]).real
                s4 += (H2[r, c] * H2[c, r]).real
        p[3] = s3
        if K >= 4:
            p[4] = s4
    if K >= 5:
        H3 = np.dot(H2, H)
        s5 = 0.0
        s6 = 0.0
        for r in range(N):
            for c in range(N):
                s5 += (H3[r, c] * H2[c, r]).real
                s6 += (H3[r, c] * H3[c, r]).real
        p[5] = s5
        if K >= 6:
            p[6] = s6


def _update_h2(H, H2, N, i, j, c0, c1, col_i, col_j):
    """H2 <- (H+Delta)^2 given the old H; Delta = c0 e_i e_j^T + c1 e_j e_i^T.

    Delta H changes rows i and j; H Delta = (Delta H)^dagger changes the
    matching columns by the conjugate amounts.
    """
    for k in range(N):
        ri = c0 * H[j, k]
        rj = c1 * H[i, k]
        H2[i, k] += ri
        H2[j, k] += rj
        H2[k, i] += np.conj(ri)
        H2[k, j] += np.conj(rj)
    if i == j:
        H2[i, i] += (c0 + c1) * (c0 + c1)
    else:
        H2[i, i] += c0 * c1
        H2[j, j] += c0 * c1


def _metropolis(H, a, b, K, sweeps, burn_in, step_d, step_o, measure_every,
                eig_every, seed, target, ks, rs, starts, parts, nmeas_pow, refresh):
    np.random.seed(seed)
    N = H.shape[0]
    need_h2 = K >= 3
    KM = max(K, nmeas_pow)
    need_rc = KM >= 3
    H2 = np.zeros((N, N), np.complex128)
    p = np.zeros(KM + 1)
    _recompute(H, H2, p, N, KM, True)
    dp = np.zeros(K + 1)
    A = np.zeros((max(K, 1), 2, 2), np.complex128)
    hm = np.zeros(max(K, 1))
    col_i = np.zeros(N, np.complex128)
    col_j = np.zeros(N, np.complex128)
    n_keep = sweeps // measure_every
    n_eig = sweeps // eig_every
    meas = np.zeros((n_keep, nmeas_pow + 1))
    eigs = np.zeros((n_eig, N))
    acc_tot = 0
    prop_tot = 0
    km = 0
    ke = 0
    for sweep in range(burn_in + sweeps):
        acc_d = 0
        acc_o = 0
        for i in range(N):
            # diagonal entry
            d = step_d * (2.0 * np.random.random() - 1.0)
            if K <= 4:
                _fast_diag(H, H2, N, i, d, K, dp)
            else:
                _diag_delta_powers(H, H2, N, i, d, K, ks, rs, starts, parts, dp, hm)
            dS = _delta_action(a, b, p, dp, K)
            if dS <= 0.0 or np.random.random() < np.exp(-dS):
                if need_h2:
                    _update_h2(H, H2, N, i, i, d, 0.0, col_i, col_j)
                H[i, i] += d
                for k in range(1, K + 1):
                    p[k] += dp[k]
                acc_d += 1
            for j in range(i + 1, N):
                # real and imaginary parts are separate proposals; (H^3)_ji
                # is reused between them unless the first one is accepted
                h3ji = 0j
                fresh = False
                for part in range(2):
                    x = step_o * (2.0 * np.random.random() - 1.0)
                    if part == 0:
                        c0 = x + 0j
                    else:
                        c0 = 1j * x
                    c1 = np.conj(c0)
                    if K <= 4:
                        if K == 4 and not fresh:
                            h3ji = _h3_entry(H, H2, N, j, i)
                            fresh = True
                        _fast_off(H, H2, N, i, j, c0, c1, h3ji, K, dp)
                    else:
                        _delta_powers(H, H2, N, i, j, c0, c1, K, ks, rs, starts, parts, dp, A)
                    dS = _delta_action(a, b, p, dp, K)
                    if dS <= 0.0 or np.random.random() < np.exp(-dS):
                        if need_h2:
                            _update_h2(H, H2, N, i, j, c0, c1, col_i, col_j)
                        H[i, j] += c0
                        H[j, i] += c1
                        for k in range(1, K + 1):
                            p[k] += dp[k]
                        acc_o += 1
                        fresh = False
        if sweep % refresh == refresh - 1 or sweep == burn_in - 1:
            _recompute(H, H2, p, N, KM, need_rc)
        n_off = N * (N - 1)
        if sweep < burn_in:
            # adapt step sizes towards the target acceptance
            rd = acc_d / N
            ro = acc_o / n_off if n_off > 0 else target
            step_d *= np.exp(0.5 * (rd - target))
            step_o *= np.exp(0.5 * (ro - target))
            if not np.isfinite(p[2]) or p[2] > 1e8 * N:
                return meas, eigs, -1.0, step_d, step_o
        else:
            acc_tot += acc_d + acc_o
            prop_tot += N + n_off
            s = sweep - burn_in
            if s % measure_every == 0 and km < n_keep:
                for k in range(nmeas_pow + 1):
                    meas[km, k] = p[k]
                km += 1
            if s % eig_every == 0 and ke < n_eig:
                w = np.linalg.eigvalsh(H)
                for k in range(N):
                    eigs[ke, k] = w[k]
                ke += 1
            if not np.isfinite(p[2]) or p[2] > 1e8 * N:
                return meas, eigs, -1.0, step_d, step_o
    rate = acc_tot / prop_tot if prop_tot > 0 else 0.0
    return meas, eigs, rate, step_d, step_o


_metropolis_py = _metropolis
if HAS_NUMBA:
    _hm_entry = njit(**_JIT)(_hm_entry)
    _delta_powers = njit(**_JIT)(_delta_powers)
    _diag_delta_powers = njit(**_JIT)(_diag_delta_powers)
    _delta_action = njit(**_JIT)(_delta_action)
    _recompute = njit(**_JIT)(_recompute)
    _update_h2 = njit(**_JIT)(_update_h2)
    _fast_off = njit(**_JIT)(_fast_off)
    _fast_diag = njit(**_JIT)(_fast_diag)
    _h3_entry = njit(**_JIT)(_h3_entry)
    _metropolis_nb = njit(**_JIT)(_metropolis)
else:  # pragma: no cover
    _metropolis_nb = None


def metropolis_chain(H0, a, b, K, sweeps, burn_in, step_d, step_o, measure_every,
                     eig_every, seed, target=0.45, nmeas_pow=4, refresh=8, backend=None):
    backend = backend or ("numba" if HAS_NUMBA else "numpy")
    ks, rs, starts, parts = compositions_table(K)
    f = _metropolis_nb if backend == "numba" else _metropolis_py
    H = np.array(H0, dtype=np.complex128, copy=True)
    out = f(H, np.asarray(a, float), np.asarray(b, float), int(K), int(sweeps),
            int(burn_in), float(step_d), float(step_o), int(measure_every),
            int(eig_every), int(seed), float(target), ks, rs, starts, parts, int(nmeas_pow),
            max(1, int(refresh)))
    return out + (H,)
