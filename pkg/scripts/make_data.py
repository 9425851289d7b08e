"""Regenerate the bundled constellation files and LDPC codes.

    python scripts/make_data.py [--only codes|c4_16|so-pm-qpsk|c4_256] [--out DIR]

All steps are seeded; rerunning reproduces the shipped files. The C4,16
packing search and its labeling search take a few minutes on one core.
"""
import argparse
import logging
from pathlib import Path

import numpy as np
from scipy.optimize import minimize
from scipy.spatial.distance import pdist

from bicm4d import labeling, ldpc
from bicm4d.constellation import Constellation, _label_bits, normalize, save_constellation

log = logging.getLogger("make_data")
ROOT = Path(__file__).resolve().parents[1] / "src" / "bicm4d" / "data"

CODES = {
    # name: (n, checks, column weight, seed)
    "r1_4": (1008, 756, 3, 1),
    "r1_2": (1008, 504, 3, 1),
    "r3_4": (1008, 252, 3, 1),
    "r9_10": (1000, 100, 3, 1),
}
PACKING_SEED = 1
LABEL_SEED = 1
LABEL_RESTARTS = 10
C4_256_SEED = 0


def make_codes(out):
    for name, (n, checks, wc, seed) in CODES.items():
        code = ldpc.peg_code(n, checks, wc, seed=seed, name=name)
        path = out / "codes" / ldpc.SHIPPED_CODES[name]
        ldpc.save_alist(code, path)
        log.info("%s: n=%d k=%d rate=%.4f -> %s", name, code.n, code.k, code.rate, path)


# --- SO-PM-QPSK ------------------------------------------------------------------

def so_pm_qpsk():
    """Per-polarization QPSK where each polarization is rotated by arctan(1/2)
    when the other polarization's symbol index is odd. Labels are a 2-bit
    Gray code per polarization (x bits first)."""
    th = np.arctan(0.5)
    gray = [0, 1, 3, 2]
    pts, labs = [], []
    for a in range(4):
        for b in range(4):
            ax = np.pi / 2 * a + th * (b % 2)
            ay = np.pi / 2 * b + th * (a % 2)
            pts.append([np.cos(ax), np.sin(ax), np.cos(ay), np.sin(ay)])
            labs.append(4 * gray[a] + gray[b])
    return normalize(Constellation("so-pm-qpsk", np.array(pts), np.array(labs)))


# --- C4,16 -----------------------------------------------------------------------

def _pack(M, N, x0):
    iu = np.triu_indices(M, 1)
    k = np.arange(len(iu[0]))

    def cons(v):
        x = v.reshape(M, N)
        return np.sum((x[iu[0]] - x[iu[1]]) ** 2, axis=1) - 1.0

    def cjac(v):
        x = v.reshape(M, N)
        J = np.zeros((len(k), M, N))
        d = x[iu[0]] - x[iu[1]]
        J[k, iu[0]] = 2 * d
        J[k, iu[1]] = -2 * d
        return J.reshape(len(k), -1)

    r = minimize(lambda v: np.mean(v * v) * N, x0.ravel(), jac=lambda v: 2 * v / M,
                 constraints=[{"type": "ineq", "fun": cons, "jac": cjac}],
                 method="SLSQP", options={"maxiter": 1000, "ftol": 1e-14})
    x = r.x.reshape(M, N)
    return x - x.mean(axis=0)


def _gain(x):
    return 10 * np.log10(pdist(x).min() ** 2 / np.mean(np.sum(x * x, axis=1)))


def c4_16(starts=400, target=1.1137):
    """Energy-minimal 16-point packing in 4-D (unit minimum distance), the
    best of ``starts`` seeded SLSQP runs; stops early once ``target`` dB over
    PM-QPSK is reached. Labeled by the GMI swap search."""
    rng = np.random.default_rng(PACKING_SEED)
    best = None
    for s in range(starts):
        x = _pack(16, 4, rng.normal(size=(16, 4)))
        g = _gain(x)
        if best is None or g > best[0]:
            best = (g, x)
            log.info("start %d: %.5f dB", s, g)
        if g >= target:
            break
    c = normalize(Constellation("c4_16", best[1], np.arange(16)))
    cfg = labeling.LabelingSearchConfig(restarts=LABEL_RESTARTS, seed=LABEL_SEED)
    res = labeling.optimize_labeling(c, cfg, name="c4_16")
    log.info("c4_16 labeling objective %.6f", res.objective)
    return res.constellation


# --- C4,256 ----------------------------------------------------------------------

def _d4_points(radius):
    r = np.arange(-radius, radius + 1)
    g = np.stack(np.meshgrid(r, r, r, r, indexing="ij"), -1).reshape(-1, 4)
    return g[g.sum(axis=1) % 2 == 0].astype(float)


def _lattice_subset(M, offsets):
    """M lowest-energy points of D4 + offset, best offset by d_min^2 / Es."""
    lat = _d4_points(5)
    best = None
    for off in offsets:
        p = lat - np.asarray(off, float)
        e = np.sum(p * p, axis=1)
        order = np.lexsort((*p.T[::-1], e))
        x = p[order[:M]]
        x = x - x.mean(axis=0)
        g = 2.0 / np.mean(np.sum(x * x, axis=1))
        if best is None or g > best[0]:
            best = (g, x)
    return best[1]


def _hamming(labels, m):
    b = _label_bits(labels, m).astype(np.int64)
    return b @ (1 - b).T + (1 - b) @ b.T


def bsa_labels(x, m, es_n0_db=12.0, restarts=4, seed=C4_256_SEED):
    """Swap descent on the pairwise error cost sum_ij exp(-d_ij^2 / 4N0) * hamming.

    A cheap stand-in for the GMI objective at large M."""
    M = len(x)
    n0 = np.mean(np.sum(x * x, axis=1)) / 10 ** (es_n0_db / 10)
    d2 = np.sum((x[:, None] - x[None]) ** 2, axis=2)
    W = np.exp(-d2 / (4 * n0))
    np.fill_diagonal(W, 0.0)
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        labels = rng.permutation(M)
        H = _hamming(labels, m)
        while True:
            G = W @ H
            dg = np.diag(G)
            # cost change of swapping the labels of points a and b
            D = G + G.T - dg[:, None] - dg[None, :] + 2 * W * H
            np.fill_diagonal(D, 0.0)
            a, b = np.unravel_index(np.argmin(D), D.shape)
            if D[a, b] > -1e-12:
                break
            labels[[a, b]] = labels[[b, a]]
            H = _hamming(labels, m)
        cost = float(np.sum(W * H))
        if best is None or cost < best[0]:
            best = (cost, labels.copy())
    return best[1]


def c4_256():
    offsets = [(0, 0, 0, 0), (1, 0, 0, 0), (0.5, 0.5, 0.5, 0.5), (0.5, 0.5, 0, 0), (0.5, 0, 0, 0),
               (0.25, 0.25, 0.25, 0.25), (1, 1, 1, 1)]
    x = _lattice_subset(256, offsets)
    return normalize(Constellation("c4_256", x, bsa_labels(x, 8)))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--only", choices=("codes", "c4_16", "so-pm-qpsk", "c4_256"))
    ap.add_argument("--out", type=Path, default=ROOT)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    (args.out / "codes").mkdir(parents=True, exist_ok=True)
    (args.out / "constellations").mkdir(parents=True, exist_ok=True)
    jobs = {
        "codes": lambda: make_codes(args.out),
        "so-pm-qpsk": lambda: save_constellation(so_pm_qpsk(), args.out / "constellations" / "so_pm_qpsk.txt"),
        "c4_256": lambda: save_constellation(c4_256(), args.out / "constellations" / "c4_256.txt"),
        "c4_16": lambda: save_constellation(c4_16(), args.out / "constellations" / "c4_16.txt"),
    }
    for name, job in jobs.items():
        if args.only in (None, name):
            log.info("== %s", name)
            job()


if __name__ == "__main__":
    main()
