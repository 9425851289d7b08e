"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3]

Each kernel runs on identical inputs with both backends; the table shows the
best wall time of ``--repeat`` runs and the speedup.
"""
import argparse
import time

import numpy as np

from bicm4d import _backend, ldpc, rates
from bicm4d import constellation as cons
from bicm4d.channel import ChannelSpec, substream


def best_of(fn, repeat):
    t = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        t.append(time.perf_counter() - t0)
    return min(t)


def cases():
    c16 = cons.builtin("c4_16")
    c256 = cons.builtin("pm-16qam")
    g = rates.quadrature_grid(10, 4)
    n0 = 10 ** (-0.5)
    for c in (c16, c256):
        args = rates.kernel_geometry(c)
        yield f"quad_terms {c.name} q=10", lambda k, a=args: k.quad_terms(*a, g.nodes, g.weights, n0)

    args = rates.kernel_geometry(c16)
    rng = substream(0)
    sym = rng.integers(0, 16, 100_000).astype(np.intp)
    z = rng.normal(scale=np.sqrt(n0 / 2), size=(100_000, 4))
    yield "sample_terms c4_16 1e5", lambda k: k.sample_terms(*args, sym, z, n0)

    pts, bits = np.ascontiguousarray(c16.points), np.ascontiguousarray(c16.bits)
    y = c16.points[sym[:20_000]] + z[:20_000]
    yield "llr exact c4_16 2e4", lambda k: k.llr(pts, bits, y, n0, 50.0, False)
    yield "llr maxlog c4_16 2e4", lambda k: k.llr(pts, bits, y, n0, 50.0, True)

    code = ldpc.builtin_code("r1_2")
    cw = code.encode(rng.integers(0, 2, code.k))
    ch = ChannelSpec.from_es_n0_db(1.5, 1)
    llr = -4 * ((1 - 2.0 * cw) + rng.normal(scale=ch.sigma, size=code.n)) / ch.n0
    dec = (code.chk_ptr, code.edge_var, code.var_ptr, code.var_edge, llr, 50)
    yield "bp_decode r1_2 (n=1008)", lambda k: k.bp_decode(*dec)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    try:
        compiled = _backend.get("compiled")
    except ImportError:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    python = _backend.get("python")
    print(f"{'kernel':32s} {'compiled':>10s} {'python':>10s} {'speedup':>8s}")
    for name, fn in cases():
        tc = best_of(lambda: fn(compiled), args.repeat)
        tp = best_of(lambda: fn(python), args.repeat)
        print(f"{name:32s} {tc * 1e3:9.1f}ms {tp * 1e3:9.1f}ms {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
