# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.

Every function here has a numpy twin with the same signature in
:mod:`bicm4d._fallback`; :mod:`bicm4d._backend` picks one at import.
Built with -ffast-math at compile time (vectorized exp); nothing here may
depend on infinities or NaNs.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, log1p, sqrt, fabs

cnp.import_array()

cdef double LN2 = 0.6931471805599453
# neighbours whose term is provably PRUNE nats below the j == i term are
# skipped; they contribute < 1e-26 relative to a sum that is >= 1
cdef double PRUNE = 60.0


cdef Py_ssize_t _cutoff(const double* r, Py_ssize_t M, double rc) noexcept nogil:
    """Number of leading entries of ascending ``r`` with r <= rc."""
    cdef Py_ssize_t lo = 0, hi = M, mid
    while lo < hi:
        mid = (lo + hi) // 2
        if r[mid] <= rc:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef double _log_sums(const double* d, const double* r2, const double* same,
                      Py_ssize_t cnt, Py_ssize_t M, Py_ssize_t N, Py_ssize_t m,
                      const double* z, double inv_n0,
                      double* ebuf, double* lsame) noexcept nogil:
    """log sum_j D_ij over all and same-bit neighbours; returns the former.

    ``d``, ``r2`` and ``same`` are the neighbour-sorted rows for symbol i:
    difference vectors (N x M), squared distances (M) and same-bit
    indicators (m x M).
    """
    cdef Py_ssize_t j, n, k
    cdef double emax, s_all = 0.0, s, zn2
    for j in range(cnt):
        ebuf[j] = r2[j]
    for n in range(N):
        zn2 = 2.0 * z[n]
        for j in range(cnt):
            ebuf[j] = ebuf[j] + zn2 * d[n * M + j]
    for j in range(cnt):
        ebuf[j] = -ebuf[j] * inv_n0
    emax = ebuf[0]
    for j in range(1, cnt):
        if ebuf[j] > emax:
            emax = ebuf[j]
    for j in range(cnt):
        ebuf[j] = exp(ebuf[j] - emax)
        s_all = s_all + ebuf[j]
    for k in range(m):
        s = 0.0
        for j in range(cnt):
            s = s + ebuf[j] * same[k * M + j]
        lsame[k] = emax + log(s)
    return emax + log(s_all)


def quad_terms(const double[:, :, ::1] dsort, const double[:, ::1] r2sort,
               const double[:, ::1] rsort, const double[:, :, ::1] samesort,
               const double[:, ::1] nodes, const double[::1] weights,
               double n0, bint prune=True):
    """Per-symbol weighted log2 sums over a quadrature grid.

    Inputs come from :func:`bicm4d.rates.kernel_geometry`. Returns
    ``(mi_terms, bit_terms)`` with shapes ``(M,)`` and ``(M, m)``;
    ``mi = m - mean(mi_terms)`` and ``bit_mi[k] = 1 - mean(bit_terms[:, k])``.
    """
    cdef Py_ssize_t M = dsort.shape[0], N = dsort.shape[1], m = samesort.shape[1]
    cdef Py_ssize_t Q = nodes.shape[0], i, q, n, k, cnt
    cdef double s0 = sqrt(n0), inv_n0 = 1.0 / n0, zn, lall, acc, w
    mi_np = np.zeros(M)
    bit_np = np.zeros((M, m))
    cdef double[::1] mi_t = mi_np
    cdef double[:, ::1] bit_t = bit_np
    cdef double[::1] ebuf = np.empty(M)
    cdef double[::1] lsame = np.empty(m)
    cdef double[::1] z = np.empty(N)
    with nogil:
        for i in range(M):
            for q in range(Q):
                acc = 0.0
                for n in range(N):
                    z[n] = s0 * nodes[q, n]
                    acc = acc + z[n] * z[n]
                cnt = M
                if prune:
                    zn = sqrt(acc)
                    cnt = _cutoff(&rsort[i, 0], M, zn + sqrt(zn * zn + PRUNE * n0))
                lall = _log_sums(&dsort[i, 0, 0], &r2sort[i, 0], &samesort[i, 0, 0],
                                 cnt, M, N, m, &z[0], inv_n0, &ebuf[0], &lsame[0])
                w = weights[q]
                mi_t[i] += w * lall
                for k in range(m):
                    bit_t[i, k] += w * (lall - lsame[k])
            mi_t[i] /= LN2
            for k in range(m):
                bit_t[i, k] /= LN2
    return mi_np, bit_np


def sample_terms(const double[:, :, ::1] dsort, const double[:, ::1] r2sort,
                 const double[:, ::1] rsort, const double[:, :, ::1] samesort,
                 const Py_ssize_t[::1] sym, const double[:, ::1] z, double n0):
    """Per-sample log2 sums for transmitted ``sym[s]`` and noise ``z[s]``."""
    cdef Py_ssize_t M = dsort.shape[0], N = dsort.shape[1], m = samesort.shape[1]
    cdef Py_ssize_t S = sym.shape[0], s, n, k, i, cnt
    cdef double inv_n0 = 1.0 / n0, zn, lall, acc
    mi_np = np.empty(S)
    bit_np = np.empty((S, m))
    cdef double[::1] mi_s = mi_np
    cdef double[:, ::1] bit_s = bit_np
    cdef double[::1] ebuf = np.empty(M)
    cdef double[::1] lsame = np.empty(m)
    with nogil:
        for s in range(S):
            i = sym[s]
            acc = 0.0
            for n in range(N):
                acc = acc + z[s, n] * z[s, n]
            zn = sqrt(acc)
            cnt = _cutoff(&rsort[i, 0], M, zn + sqrt(zn * zn + PRUNE * n0))
            lall = _log_sums(&dsort[i, 0, 0], &r2sort[i, 0], &samesort[i, 0, 0],
                             cnt, M, N, m, &z[s, 0], inv_n0, &ebuf[0], &lsame[0])
            mi_s[s] = lall / LN2
            for k in range(m):
                bit_s[s, k] = (lall - lsame[k]) / LN2
    return mi_np, bit_np


def llr(const double[:, ::1] pts, const unsigned char[:, ::1] bits,
        const double[:, ::1] y, double n0, double clip, bint maxlog=False):
    """Bit LLRs ln(P(b=1|y)/P(b=0|y)) for each row of ``y``."""
    cdef Py_ssize_t M = pts.shape[0], N = pts.shape[1], m = bits.shape[1]
    cdef Py_ssize_t S = y.shape[0], s, j, n, k
    cdef double d, acc, mx0, mx1, s0, s1, L
    cdef bint have0, have1
    out_np = np.empty((S, m))
    cdef double[:, ::1] out = out_np
    cdef double[::1] met = np.empty(M)
    with nogil:
        for s in range(S):
            for j in range(M):
                acc = 0.0
                for n in range(N):
                    d = y[s, n] - pts[j, n]
                    acc = acc + d * d
                met[j] = -acc / n0
            for k in range(m):
                have0 = False
                have1 = False
                mx0 = 0.0
                mx1 = 0.0
                for j in range(M):
                    if bits[j, k]:
                        if not have1 or met[j] > mx1:
                            mx1 = met[j]
                            have1 = True
                    elif not have0 or met[j] > mx0:
                        mx0 = met[j]
                        have0 = True
                if maxlog:
                    L = mx1 - mx0
                else:
                    s0 = 0.0
                    s1 = 0.0
                    for j in range(M):
                        if bits[j, k]:
                            s1 = s1 + exp(met[j] - mx1)
                        else:
                            s0 = s0 + exp(met[j] - mx0)
                    L = (mx1 + log(s1)) - (mx0 + log(s0))
                if L > clip:
                    L = clip
                elif L < -clip:
                    L = -clip
                out[s, k] = L
    return out_np


cdef inline double _boxplus(double a, double b) noexcept nogil:
    cdef double sgn = 1.0, mag
    if (a < 0.0) != (b < 0.0):
        sgn = -1.0
    mag = fabs(a) if fabs(a) < fabs(b) else fabs(b)
    return sgn * mag + log1p(exp(-fabs(a + b))) - log1p(exp(-fabs(a - b)))


cdef bint _syndrome_ok(const Py_ssize_t[::1] chk_ptr, const Py_ssize_t[::1] edge_var,
                       const double[::1] post) noexcept nogil:
    cdef Py_ssize_t c, e, par
    cdef Py_ssize_t C = chk_ptr.shape[0] - 1, V = post.shape[0]
    for e in range(V):
        if post[e] == 0.0:
            return False
    for c in range(C):
        par = 0
        for e in range(chk_ptr[c], chk_ptr[c + 1]):
            if post[edge_var[e]] < 0.0:
                par ^= 1
        if par:
            return False
    return True


def bp_decode(const Py_ssize_t[::1] chk_ptr, const Py_ssize_t[::1] edge_var,
              const Py_ssize_t[::1] var_ptr, const Py_ssize_t[::1] var_edge,
              const double[::1] llr_in, int max_iterations):
    """Flooding sum-product decoding.

    ``llr_in`` uses the positive-means-one convention. Edges are numbered in
    check order; ``var_edge[var_ptr[v]:var_ptr[v+1]]`` lists the edges of
    variable ``v``. Returns ``(bits, iterations, converged)``.
    """
    cdef Py_ssize_t C = chk_ptr.shape[0] - 1, V = llr_in.shape[0]
    cdef Py_ssize_t E = edge_var.shape[0], c, e, a, d, v, lo, it = 0
    cdef double tot
    cdef bint ok
    cdef double[::1] lam = np.empty(V)
    cdef double[::1] post = np.empty(V)
    cdef double[::1] v2c = np.empty(E)
    cdef double[::1] c2v = np.zeros(E)
    cdef double[::1] fwd = np.empty(E + 1)
    cdef double[::1] bwd = np.empty(E + 1)
    with nogil:
        # internal messages use ln P(0)/P(1)
        for v in range(V):
            lam[v] = -llr_in[v]
            post[v] = lam[v]
        for e in range(E):
            v2c[e] = lam[edge_var[e]]
        ok = _syndrome_ok(chk_ptr, edge_var, post)
        while not ok and it < max_iterations:
            it += 1
            for c in range(C):
                lo = chk_ptr[c]
                d = chk_ptr[c + 1] - lo
                if d == 1:
                    c2v[lo] = 50.0
                    continue
                # fwd[a] combines edges < a, bwd[a] edges > a
                fwd[1] = v2c[lo]
                for a in range(2, d):
                    fwd[a] = _boxplus(fwd[a - 1], v2c[lo + a - 1])
                bwd[d - 2] = v2c[lo + d - 1]
                for a in range(d - 3, -1, -1):
                    bwd[a] = _boxplus(bwd[a + 1], v2c[lo + a + 1])
                c2v[lo] = bwd[0]
                c2v[lo + d - 1] = fwd[d - 1]
                for a in range(1, d - 1):
                    c2v[lo + a] = _boxplus(fwd[a], bwd[a])
            for v in range(V):
                tot = lam[v]
                for a in range(var_ptr[v], var_ptr[v + 1]):
                    tot = tot + c2v[var_edge[a]]
                post[v] = tot
                for a in range(var_ptr[v], var_ptr[v + 1]):
                    e = var_edge[a]
                    v2c[e] = tot - c2v[e]
            ok = _syndrome_ok(chk_ptr, edge_var, post)
    out = np.empty(V, dtype=np.uint8)
    for v in range(V):
        out[v] = 1 if post[v] < 0.0 else 0
    return out, int(it), bool(ok)
