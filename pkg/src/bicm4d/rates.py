"""Achievable rates: MI, per-bit MI, GMI and the Shannon reference.

For unit-energy constellations on the AWGN channel with noise N0/2 per
dimension,

    I(X;Y)   = m - 1/M sum_i E_Z[ log2 sum_j D_ij ]
    I(B_k;Y) = 1 - 1/M sum_i E_Z[ log2( sum_j D_ij / sum_{j: b_k(j)=b_k(i)} D_ij ) ]

with ``D_ij = exp(-(||x_i - x_j + Z||^2 - ||Z||^2)/N0)``. The expectation
is evaluated with a tensor Gauss-Hermite rule (``Z = sqrt(N0) t``) or by
Monte Carlo. GMI is the sum of the per-bit terms.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
import weakref
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from bicm4d import _backend
from bicm4d.channel import ChannelSpec, eb_n0_db, es_n0_to_n0
from bicm4d.constellation import Constellation

DEFAULT_ORDER = 10
DEFAULT_GRID = tuple(np.round(np.arange(-10.0, 16.0 + 1e-9, 0.25), 10))
_MC_CHUNK = 1 << 16


# Fixed rotations applied to the tensor nodes. The Gaussian expectation is
# rotation invariant, but an axis-aligned product grid resonates with the
# axis-aligned decision boundaries of Cartesian constellations (PM-QPSK at
# order 10 is off by ~7e-3 bit at 10 dB); a generic rotation removes that.
_C30 = math.cos(math.radians(30.5))
_S30 = math.sin(math.radians(30.5))
ROTATIONS = {
    2: ((_C30, -_S30), (_S30, _C30)),
    4: ((-0.4776232334564505, 0.2648529289117811, 0.2871800238270954, -0.7869285906765143),
        (-0.0184844797847677, -0.5298179681642711, -0.7289441135532401, -0.4331186026176331),
        (-0.5568452013334951, -0.698802842130139, 0.37881888398575847, 0.24102751444282017),
        (-0.6793068471769962, 0.4010242317965021, -0.4926097505800455, 0.36750157349859064)),
}


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Tensor Gauss-Hermite rule with ``order`` nodes per dimension.

    ``nodes`` is (order**dims, dims), the product nodes multiplied by the
    orthogonal ``rotation``; ``weights`` are the product weights divided by
    pi**(dims/2), so they sum to one.
    """

    order: int
    dims: int
    nodes_1d: np.ndarray
    weights_1d: np.ndarray
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    rotation: np.ndarray | None = field(default=None, repr=False)


@lru_cache(maxsize=32)
def quadrature_grid(order: int = DEFAULT_ORDER, dims: int = 4, rotate: bool = True) -> QuadratureGrid:
    """The ``order``-point rule in ``dims`` dimensions.

    With ``rotate`` (default) the nodes are turned by the fixed rotation in
    :data:`ROTATIONS` when one exists for ``dims``.
    """
    if order < 1 or dims < 1:
        raise ValueError("order and dims must be >= 1")
    t, w = np.polynomial.hermite.hermgauss(order)
    nodes = np.array(list(itertools.product(t, repeat=dims)), dtype=float)
    weights = np.prod(np.array(list(itertools.product(w, repeat=dims))), axis=1) / math.pi ** (dims / 2)
    rot = None
    if rotate and dims in ROTATIONS:
        rot = np.array(ROTATIONS[dims])
        nodes = nodes @ rot.T
    nodes = np.ascontiguousarray(nodes)
    for a in (t, w, nodes, weights) + ((rot,) if rot is not None else ()):
        a.setflags(write=False)
    return QuadratureGrid(order, dims, t, w, nodes, weights, rot)


_GEOMETRY = weakref.WeakKeyDictionary()


def kernel_geometry(c: Constellation):
    """Neighbour-sorted rows per symbol: differences, squared and plain distances, same-bit flags.

    Shapes (M, N, M), (M, M), (M, M) and (M, m, M); row i is ordered by
    distance from ``x_i``, starting with ``x_i`` itself. Cached per object.
    """
    g = _GEOMETRY.get(c)
    if g is None:
        dist2, order = c.geometry
        d = (c.points[:, None, :] - c.points[order]).transpose(0, 2, 1)
        r2 = np.take_along_axis(dist2, order, axis=1)
        same = (c.bits[order] == c.bits[:, None, :]).astype(float).transpose(0, 2, 1)
        g = tuple(np.ascontiguousarray(a) for a in (d, r2, np.sqrt(r2), same))
        _GEOMETRY[c] = g
    return g


def _kernel_args(c: Constellation):
    return kernel_geometry(c)


def _fsum_mean(a):
    return math.fsum(a) / len(a)


def rate_terms(c: Constellation, n0: float, grid: QuadratureGrid | None = None):
    """MI and all per-bit MIs in one quadrature pass: ``(mi, bit_mi)``.

    Results are clamped to [0, m] and [0, 1]. The per-symbol terms are
    reduced with compensated summation, so the value does not depend on
    evaluation order.
    """
    grid = grid or quadrature_grid(DEFAULT_ORDER, c.dims)
    if grid.dims != c.dims:
        raise ValueError(f"grid has {grid.dims} dims, constellation has {c.dims}")
    mi_t, bit_t = _backend.kernels.quad_terms(*_kernel_args(c), grid.nodes, grid.weights, float(n0))
    mi = min(max(c.m - _fsum_mean(mi_t), 0.0), float(c.m))
    bit = np.array([min(max(1.0 - _fsum_mean(bit_t[:, k]), 0.0), 1.0) for k in range(c.m)])
    return mi, bit


def mi(c: Constellation, ch: ChannelSpec, grid: QuadratureGrid | None = None) -> float:
    _check_dims(c, ch)
    return rate_terms(c, ch.n0, grid)[0]


def bit_mi(c: Constellation, k: int, ch: ChannelSpec, grid: QuadratureGrid | None = None) -> float:
    """I(B_k;Y) for 1-based bit index ``k``."""
    if not 1 <= k <= c.m:
        raise IndexError(f"bit index {k} outside 1..{c.m}")
    _check_dims(c, ch)
    return float(rate_terms(c, ch.n0, grid)[1][k - 1])


def gmi(c: Constellation, ch: ChannelSpec, grid: QuadratureGrid | None = None) -> float:
    _check_dims(c, ch)
    return math.fsum(rate_terms(c, ch.n0, grid)[1])


def _check_dims(c, ch):
    if ch.dims != c.dims:
        raise ValueError(f"channel has {ch.dims} dims, constellation has {c.dims}")


@dataclass(frozen=True)
class McEstimate:
    mi: float
    mi_se: float
    gmi: float
    gmi_se: float
    bit_mi: np.ndarray
    samples: int


def rates_montecarlo(c: Constellation, ch: ChannelSpec, samples: int, rng: np.random.Generator) -> McEstimate:
    """Monte Carlo estimate of MI, GMI and per-bit MI with standard errors.

    Symbols are drawn uniformly, noise i.i.d. N(0, N0/2). Not clamped.
    """
    if samples < 1000:
        raise ValueError("samples must be >= 1000")
    _check_dims(c, ch)
    args = _kernel_args(c)
    mi_s = np.empty(samples)
    bit_s = np.empty((samples, c.m))
    for lo in range(0, samples, _MC_CHUNK):
        n = min(_MC_CHUNK, samples - lo)
        sym = rng.integers(0, c.M, size=n).astype(np.intp)
        z = rng.normal(scale=ch.sigma, size=(n, c.dims))
        mi_s[lo:lo + n], bit_s[lo:lo + n] = _backend.kernels.sample_terms(*args, sym, z, ch.n0)
    mi_v = c.m - mi_s
    gmi_v = c.m - bit_s.sum(axis=1)
    root = math.sqrt(samples)
    return McEstimate(
        mi=_fsum_mean(mi_v),
        mi_se=float(np.std(mi_v, ddof=1)) / root,
        gmi=_fsum_mean(gmi_v),
        gmi_se=float(np.std(gmi_v, ddof=1)) / root,
        bit_mi=1.0 - bit_s.mean(axis=0),
        samples=samples,
    )


def mi_montecarlo(c, ch, samples, rng):
    """``(estimate, standard_error)`` of I(X;Y)."""
    r = rates_montecarlo(c, ch, samples, rng)
    return r.mi, r.mi_se


def gmi_montecarlo(c, ch, samples, rng):
    """``(estimate, standard_error)`` of the GMI."""
    r = rates_montecarlo(c, ch, samples, rng)
    return r.gmi, r.gmi_se


def shannon_capacity(es_n0_db, dims: int = 4):
    """Capacity of ``dims`` real AWGN dimensions at total power Es (bit/symbol)."""
    if dims % 2:
        raise ValueError("dims must be even")
    snr = 10.0 ** (np.asarray(es_n0_db, dtype=float) / 10.0)
    cap = dims / 2 * np.log2(1.0 + 2.0 / dims * snr)
    return float(cap) if cap.ndim == 0 else cap


def shannon_eb_n0_db(rate, dims: int = 4):
    """Minimum Eb/N0 in dB for reliable transmission at ``rate`` bit/symbol."""
    if dims % 2:
        raise ValueError("dims must be even")
    rate = np.asarray(rate, dtype=float)
    es_n0 = dims / 2 * np.expm1(2.0 * rate / dims * math.log(2.0))
    out = 10.0 * np.log10(es_n0 / rate)
    return float(out) if out.ndim == 0 else out


# --- curves ------------------------------------------------------------------

@dataclass(frozen=True)
class RateRecord:
    es_n0_db: float
    mi: float
    gmi: float
    bit_mi: tuple
    method: str
    precision: str

    @property
    def eb_n0_db_mi(self):
        return eb_n0_db(self.es_n0_db, self.mi) if self.mi > 0 else math.nan

    @property
    def eb_n0_db_gmi(self):
        return eb_n0_db(self.es_n0_db, self.gmi) if self.gmi > 0 else math.nan


@dataclass
class RateCurve:
    name: str
    m: int
    records: list

    def column(self, key):
        return np.array([getattr(r, key) for r in self.records], dtype=float)

    @property
    def es_n0_db(self):
        return self.column("es_n0_db")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["es_n0_db", "eb_n0_db_mi", "eb_n0_db_gmi", "mi", "gmi",
                    *[f"bit_mi_{k + 1}" for k in range(self.m)], "method", "precision"])
        for r in self.records:
            w.writerow([repr(r.es_n0_db), repr(float(r.eb_n0_db_mi)), repr(float(r.eb_n0_db_gmi)),
                        repr(r.mi), repr(r.gmi), *[repr(float(b)) for b in r.bit_mi],
                        r.method, r.precision])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, name=""):
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty rate-curve CSV")
        m = sum(1 for k in rows[0] if k.startswith("bit_mi_"))
        recs = [RateRecord(float(r["es_n0_db"]), float(r["mi"]), float(r["gmi"]),
                           tuple(float(r[f"bit_mi_{k + 1}"]) for k in range(m)),
                           r["method"], r["precision"]) for r in rows]
        return cls(name, m, recs)


def rate_curve(c: Constellation, es_n0_grid=DEFAULT_GRID, method="quadrature",
               order=DEFAULT_ORDER, samples=1_000_000, seed=0) -> RateCurve:
    """MI/GMI over an Es/N0 grid (dB) by quadrature or Monte Carlo."""
    grid_db = [float(s) for s in es_n0_grid]
    if not grid_db:
        raise ValueError("empty SNR grid")
    recs = []
    if method == "quadrature":
        qg = quadrature_grid(order, c.dims)
        for s in grid_db:
            m_, b_ = rate_terms(c, es_n0_to_n0(s), qg)
            recs.append(RateRecord(s, m_, math.fsum(b_), tuple(b_), method, f"order={order}"))
    elif method == "montecarlo":
        from bicm4d.channel import substream
        for idx, s in enumerate(grid_db):
            r = rates_montecarlo(c, ChannelSpec.from_es_n0_db(s, c.dims), samples, substream(seed, idx))
            recs.append(RateRecord(s, r.mi, r.gmi, tuple(r.bit_mi), method,
                                   f"samples={samples} mi_se={r.mi_se:.3e} gmi_se={r.gmi_se:.3e}"))
    else:
        raise ValueError(f"unknown method {method!r}")
    return RateCurve(c.name, c.m, recs)


def es_n0_at_rate(curve: RateCurve, rate: float, which="gmi"):
    """Es/N0 (dB) where the curve first reaches ``rate``, linearly interpolated.

    Returns None if the curve never reaches it on the grid.
    """
    es = curve.es_n0_db
    v = curve.column(which)
    hit = np.flatnonzero(v >= rate)
    if len(hit) == 0:
        return None
    i = hit[0]
    if i == 0:
        return float(es[0]) if v[0] == rate else None
    f = (rate - v[i - 1]) / (v[i] - v[i - 1])
    return float(es[i - 1] + f * (es[i] - es[i - 1]))


def eb_n0_at_rate(curve: RateCurve, rate: float, which="gmi"):
    es = es_n0_at_rate(curve, rate, which)
    return None if es is None else float(eb_n0_db(es, rate))


def find_crossing(a: RateCurve, b: RateCurve, which="gmi", tol=1e-4):
    """Rate (bit/symbol) where two curves on a shared grid cross, else None.

    Curves sharing an Es/N0 grid cross in the Eb/N0-rate plane exactly where
    they cross in the Es/N0-rate plane, so the sign change of ``a - b`` on
    the grid is located and the crossing interpolated linearly. Differences
    below ``tol`` count as ties and never start a crossing.
    """
    es_a, es_b = a.es_n0_db, b.es_n0_db
    if len(es_a) != len(es_b) or not np.allclose(es_a, es_b):
        raise ValueError("curves must share the SNR grid")
    va, vb = a.column(which), b.column(which)
    d = va - vb
    last = None
    for i in range(len(d)):
        if abs(d[i]) <= tol:
            continue
        if last is not None and np.sign(d[i]) != np.sign(d[last]):
            f = d[last] / (d[last] - d[i])
            ra = va[last] + f * (va[i] - va[last])
            rb = vb[last] + f * (vb[i] - vb[last])
            return float(0.5 * (ra + rb))
        last = i
    return None
