"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Same signatures and return values. The rate kernels skip the distance
pruning of the compiled version (which only drops terms below 1e-26
relative), so the two agree far below any test tolerance.
"""
import numpy as np
from scipy.special import logsumexp

LN2 = np.log(2.0)
_CHUNK = 1 << 15


def _log_sums(d, r2, same, z, n0):
    # rows of one symbol i; z: (S, N) noise draws
    e = -(r2[None, :] + 2.0 * z @ d) / n0  # (S, M)
    emax = e.max(axis=1, keepdims=True)
    w = np.exp(e - emax)
    lall = emax[:, 0] + np.log(w.sum(axis=1))
    lsame = emax + np.log(w @ same.T)  # (S, m)
    return lall, lsame


def quad_terms(dsort, r2sort, rsort, samesort, nodes, weights, n0, prune=True):
    M, m = samesort.shape[:2]
    z = np.sqrt(n0) * np.asarray(nodes)
    mi_t = np.zeros(M)
    bit_t = np.zeros((M, m))
    for i in range(M):
        for lo in range(0, len(z), _CHUNK):
            wc = weights[lo:lo + _CHUNK]
            lall, lsame = _log_sums(dsort[i], r2sort[i], samesort[i], z[lo:lo + _CHUNK], n0)
            mi_t[i] += wc @ lall
            bit_t[i] += wc @ (lall[:, None] - lsame)
    return mi_t / LN2, bit_t / LN2


def sample_terms(dsort, r2sort, rsort, samesort, sym, z, n0):
    S = len(sym)
    m = samesort.shape[1]
    mi_s = np.empty(S)
    bit_s = np.empty((S, m))
    for i in np.unique(sym):
        sel = np.flatnonzero(sym == i)
        lall, lsame = _log_sums(dsort[i], r2sort[i], samesort[i], z[sel], n0)
        mi_s[sel] = lall / LN2
        bit_s[sel] = (lall[:, None] - lsame) / LN2
    return mi_s, bit_s


def llr(pts, bits, y, n0, clip, maxlog=False):
    met = -np.sum((y[:, None, :] - pts[None, :, :]) ** 2, axis=2) / n0  # (S, M)
    out = np.empty((len(y), bits.shape[1]))
    for k in range(bits.shape[1]):
        one = bits[:, k].astype(bool)
        if maxlog:
            out[:, k] = met[:, one].max(axis=1) - met[:, ~one].max(axis=1)
        else:
            out[:, k] = logsumexp(met[:, one], axis=1) - logsumexp(met[:, ~one], axis=1)
    return np.clip(out, -clip, clip)


def _boxplus(a, b):
    with np.errstate(invalid="ignore"):
        sgn = np.where((a < 0) != (b < 0), -1.0, 1.0)
        r = (sgn * np.minimum(np.abs(a), np.abs(b))
             + np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b))))
    r = np.where(np.isinf(a), b, r)
    return np.where(np.isinf(b) & ~np.isinf(a), a, r)


def _syndrome_ok(chk_ptr, edge_var, post):
    if np.any(post == 0.0):
        return False
    hard = (post[edge_var] < 0).astype(np.int64)
    return not np.any(np.add.reduceat(hard, chk_ptr[:-1]) & 1)


def bp_decode(chk_ptr, edge_var, var_ptr, var_edge, llr_in, max_iterations):
    chk_ptr = np.asarray(chk_ptr)
    edge_var = np.asarray(edge_var)
    deg = np.diff(chk_ptr)
    C, E = len(deg), len(edge_var)
    dmax = int(deg.max())
    # padded check view; +inf is the neutral element of boxplus
    slot = np.arange(E) - np.repeat(chk_ptr[:-1], deg)
    row = np.repeat(np.arange(C), deg)
    edge_vars_of = np.repeat(np.arange(len(var_ptr) - 1), np.diff(var_ptr))

    lam = -np.asarray(llr_in, dtype=float)
    post = lam.copy()
    v2c = lam[edge_var]
    it = 0
    ok = _syndrome_ok(chk_ptr, edge_var, post)
    while not ok and it < max_iterations:
        it += 1
        grid = np.full((C, dmax), np.inf)
        grid[row, slot] = v2c
        fwd = np.full((C, dmax + 1), np.inf)
        bwd = np.full((C, dmax + 1), np.inf)
        for a in range(dmax):
            fwd[:, a + 1] = _boxplus(fwd[:, a], grid[:, a])
        for a in range(dmax - 1, -1, -1):
            bwd[:, a] = _boxplus(bwd[:, a + 1], grid[:, a])
        c2v = _boxplus(fwd[row, slot], bwd[row, slot + 1])
        c2v[deg[row] == 1] = 50.0
        post = lam + np.bincount(edge_vars_of, weights=c2v[var_edge], minlength=len(lam))
        v2c = post[edge_var] - c2v
        ok = _syndrome_ok(chk_ptr, edge_var, post)
    return (post < 0).astype(np.uint8), it, bool(ok)
