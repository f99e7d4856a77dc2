"""Compiled inner loops: incomplete factorizations, triangular solves, sparse product."""
import numba
import numpy as np

_jit = numba.njit(cache=True, nogil=True)

# pivots smaller than this times the largest row entry count as breakdown
PIVOT_RTOL = 1e-14


@_jit
def ilu0_factor(n, ptr, ind, val):
    """IKJ ILU(0) on a CSR matrix with sorted rows.

    Returns ``(lu, diag_pos, bad_row)``: the combined factors on the pattern
    of A (strict lower part holds L, the rest U) and the first row whose pivot
    broke down, or -1.
    """
    lu = val.copy()
    diag_pos = np.full(n, -1, np.int64)
    pos = np.full(n, -1, np.int64)
    for i in range(n):
        lo, hi = ptr[i], ptr[i + 1]
        rowmax = 0.0
        for p in range(lo, hi):
            pos[ind[p]] = p
            rowmax = max(rowmax, abs(val[p]))
            if ind[p] == i:
                diag_pos[i] = p
        if diag_pos[i] < 0:
            return lu, diag_pos, i
        for p in range(lo, hi):
            k = ind[p]
            if k >= i:
                break
            lu[p] /= lu[diag_pos[k]]
            lik = lu[p]
            for q in range(diag_pos[k] + 1, ptr[k + 1]):
                t = pos[ind[q]]
                if t >= 0:
                    lu[t] -= lik * lu[q]
        for p in range(lo, hi):
            pos[ind[p]] = -1
        if not abs(lu[diag_pos[i]]) >= PIVOT_RTOL * rowmax:
            return lu, diag_pos, i
    return lu, diag_pos, -1


@_jit
def _grow_i(a, need):
    if need <= a.size:
        return a
    b = np.empty(max(need, 2 * a.size), a.dtype)
    b[:a.size] = a
    return b


@_jit
def _grow_f(a, need):
    if need <= a.size:
        return a
    b = np.empty(max(need, 2 * a.size), a.dtype)
    b[:a.size] = a
    return b


@_jit
def ilut_factor(n, ptr, ind, val, tol, shift):
    """Row-wise threshold ILU without pivoting.

    In row ``i`` an entry of the working row (``l_ik * u_kk`` on the lower
    side, ``u_ij`` on the upper) is dropped when its magnitude is below
    ``tol * ||a_i||_2``; the diagonal is always kept.  ``shift`` is
    added to every diagonal entry first.  Returns L (strict, unit diagonal
    implied) and U (diagonal first in each row) as CSR arrays plus the first
    breakdown row or -1.
    """
    cap = 2 * ptr[n] + n
    l_ptr = np.zeros(n + 1, np.int64)
    l_ind = np.empty(cap, np.int64)
    l_val = np.empty(cap, np.float64)
    u_ptr = np.zeros(n + 1, np.int64)
    u_ind = np.empty(cap, np.int64)
    u_val = np.empty(cap, np.float64)
    w = np.zeros(n)
    used = np.zeros(n, np.bool_)
    lower = np.empty(n, np.int64)
    upper = np.empty(n, np.int64)
    nl = 0
    nu = 0
    for i in range(n):
        nlo = 0
        nup = 0
        norm2 = 0.0
        rowmax = 0.0
        for p in range(ptr[i], ptr[i + 1]):
            j = ind[p]
            w[j] = val[p]
            norm2 += val[p] * val[p]
            rowmax = max(rowmax, abs(val[p]))
            used[j] = True
            if j < i:
                lower[nlo] = j
                nlo += 1
            elif j > i:
                upper[nup] = j
                nup += 1
        if not used[i]:
            used[i] = True
            w[i] = 0.0
        w[i] += shift
        tau = tol * np.sqrt(norm2)

        # eliminate lower entries in increasing column order; fill may add more
        done = 0
        while done < nlo:
            m = done
            for t in range(done + 1, nlo):
                if lower[t] < lower[m]:
                    m = t
            k = lower[m]
            lower[m] = lower[done]
            lower[done] = k
            done += 1
            wk = w[k]
            w[k] = 0.0
            used[k] = False
            # the row entry itself, l_ik * u_kk, is what the threshold measures
            if abs(wk) < tau:
                continue
            mult = wk / u_val[u_ptr[k]]
            l_ind = _grow_i(l_ind, nl + 1)
            l_val = _grow_f(l_val, nl + 1)
            l_ind[nl] = k
            l_val[nl] = mult
            nl += 1
            for q in range(u_ptr[k] + 1, u_ptr[k + 1]):
                j = u_ind[q]
                if not used[j]:
                    used[j] = True
                    w[j] = 0.0
                    if j < i:
                        lower[nlo] = j
                        nlo += 1
                    else:
                        upper[nup] = j
                        nup += 1
                w[j] -= mult * u_val[q]
        # multipliers were appended in increasing column order
        l_ptr[i + 1] = nl

        diag = w[i]
        w[i] = 0.0
        used[i] = False
        u_ind = _grow_i(u_ind, nu + nup + 1)
        u_val = _grow_f(u_val, nu + nup + 1)
        u_ind[nu] = i
        u_val[nu] = diag
        start = nu + 1
        cnt = 0
        for t in range(nup):
            j = upper[t]
            if abs(w[j]) >= tau:
                u_ind[start + cnt] = j
                cnt += 1
        seg = np.sort(u_ind[start:start + cnt])
        for t in range(cnt):
            u_ind[start + t] = seg[t]
            u_val[start + t] = w[seg[t]]
        for t in range(nup):
            j = upper[t]
            w[j] = 0.0
            used[j] = False
        nu = start + cnt
        u_ptr[i + 1] = nu
        if not abs(diag) >= PIVOT_RTOL * max(rowmax, abs(shift)):
            return l_ptr, l_ind[:nl], l_val[:nl], u_ptr, u_ind[:nu], u_val[:nu], i
    return l_ptr, l_ind[:nl], l_val[:nl], u_ptr, u_ind[:nu], u_val[:nu], -1


@_jit
def lower_unit_solve(n, ptr, ind, val, b):
    x = np.empty(n)
    for i in range(n):
        s = b[i]
        for p in range(ptr[i], ptr[i + 1]):
            s -= val[p] * x[ind[p]]
        x[i] = s
    return x


@_jit
def upper_solve(n, ptr, ind, val, b):
    """Back substitution; the diagonal is the first entry of every row."""
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        d = ptr[i]
        s = b[i]
        for p in range(d + 1, ptr[i + 1]):
            s -= val[p] * x[ind[p]]
        x[i] = s / val[d]
    return x


@_jit
def spgemm(n, m, a_ptr, a_ind, a_val, b_ptr, b_ind, b_val):
    """Gustavson row-by-row product of CSR matrices (n x k) @ (k x m), rows sorted."""
    c_ptr = np.zeros(n + 1, np.int64)
    c_ind = np.empty(a_ind.size + b_ind.size + n, np.int64)
    c_val = np.empty(c_ind.size, np.float64)
    acc = np.zeros(m)
    mark = np.full(m, -1, np.int64)
    cols = np.empty(m, np.int64)
    nnz = 0
    for i in range(n):
        nc = 0
        for p in range(a_ptr[i], a_ptr[i + 1]):
            k = a_ind[p]
            av = a_val[p]
            for q in range(b_ptr[k], b_ptr[k + 1]):
                j = b_ind[q]
                if mark[j] != i:
                    mark[j] = i
                    acc[j] = 0.0
                    cols[nc] = j
                    nc += 1
                acc[j] += av * b_val[q]
        c_ind = _grow_i(c_ind, nnz + nc)
        c_val = _grow_f(c_val, nnz + nc)
        srt = np.sort(cols[:nc])
        for t in range(nc):
            c_ind[nnz + t] = srt[t]
            c_val[nnz + t] = acc[srt[t]]
        nnz += nc
        c_ptr[i + 1] = nnz
    return c_ptr, c_ind[:nnz], c_val[:nnz]
