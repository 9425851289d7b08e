"""Coded Monte Carlo BER simulation of the BICM chain.

Transmitter: info bits -> LDPC encoder -> cyclic bit-to-label assignment ->
constellation points. Receiver: AWGN -> bit-wise demapper (true N0) -> BP
decoder. BER is counted on information bits.
"""
from __future__ import annotations

import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import beta

from bicm4d import demapper, rates
from bicm4d.channel import ChannelSpec, eb_n0_db, substream
from bicm4d.constellation import Constellation
from bicm4d.ldpc import DEFAULT_ITERATIONS, LdpcCode

CSV_COLUMNS = ("es_n0_db", "blocks", "info_bits", "bit_errors", "ber", "frame_errors", "fer", "mean_iters")
WATERFALL_BER = 1e-3


def map_bits_to_symbols(c: Constellation, bits):
    """Consecutive groups of m bits form one label (first bit is the MSB)."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.shape[-1] % c.m:
        raise ValueError(f"bit sequence length {bits.shape[-1]} is not a multiple of m={c.m}")
    groups = bits.reshape(bits.shape[:-1] + (-1, c.m)).astype(np.int64)
    labels = (groups << np.arange(c.m - 1, -1, -1)).sum(axis=-1)
    return c.points[c.index_of_label[labels]]


@dataclass(frozen=True)
class SimConfig:
    constellation: Constellation
    code: LdpcCode
    es_n0_db: tuple
    demapper: str = "exact"
    max_blocks: int = 1000
    min_errors: int = 100
    max_iterations: int = DEFAULT_ITERATIONS
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.min_errors < 1:
            raise ValueError("min_errors must be >= 1")
        if self.max_blocks < 1:
            raise ValueError("max_blocks must be >= 1")
        if len(self.es_n0_db) == 0:
            raise ValueError("Es/N0 grid is empty")
        if self.code.n % self.constellation.m:
            raise ValueError(f"code length {self.code.n} is not a multiple of m={self.constellation.m}")
        if self.demapper not in ("exact", "maxlog", "factorized"):
            raise ValueError(f"unknown demapper {self.demapper!r}")
        if self.demapper == "factorized" and self.constellation.pam is None:
            raise ValueError("factorized demapping needs a Gray-labeled Cartesian product")
        object.__setattr__(self, "es_n0_db", tuple(float(s) for s in self.es_n0_db))

    @property
    def rate(self):
        """Transmission rate R = Rc * m in bit/symbol."""
        return self.code.rate * self.constellation.m

    def echo(self):
        c, h = self.constellation, self.code
        return {
            "constellation": c.name, "M": c.M, "dims": c.dims,
            "code": h.name, "n": h.n, "k": h.k, "code_rate": h.rate, "rate": self.rate,
            "demapper": self.demapper, "es_n0_db": list(self.es_n0_db),
            "max_blocks": self.max_blocks, "min_errors": self.min_errors,
            "max_iterations": self.max_iterations, "seed": self.seed, "workers": self.workers,
            "block_stream": "substream(seed, point_index, block_index)",
        }


@dataclass
class BerPoint:
    es_n0_db: float
    eb_n0_db: float
    blocks: int
    info_bits: int
    bit_errors: int
    frame_errors: int
    iterations: int
    wall_time: float = 0.0

    @property
    def ber(self):
        return self.bit_errors / self.info_bits

    @property
    def fer(self):
        return self.frame_errors / self.blocks

    @property
    def mean_iters(self):
        return self.iterations / self.blocks

    def ber_interval(self, level=0.95):
        """Clopper-Pearson interval for the BER (bits treated as independent)."""
        a = (1.0 - level) / 2
        k, n = self.bit_errors, self.info_bits
        lo = 0.0 if k == 0 else float(beta.ppf(a, k, n - k + 1))
        hi = 1.0 if k == n else float(beta.ppf(1 - a, k + 1, n - k))
        return lo, hi


@dataclass
class SimResult:
    config: dict
    points: list = field(default_factory=list)

    def column(self, key):
        return np.array([getattr(p, key) for p in self.points], dtype=float)

    def to_csv(self) -> str:
        # wall time is left out so that reruns are byte-identical
        buf = io.StringIO()
        buf.write(",".join(CSV_COLUMNS) + "\n")
        for p in self.points:
            buf.write(f"{p.es_n0_db!r},{p.blocks},{p.info_bits},{p.bit_errors},{p.ber!r},"
                      f"{p.frame_errors},{p.fer!r},{p.mean_iters!r}\n")
        return buf.getvalue()

    def to_json(self) -> str:
        pts = []
        for p in self.points:
            d = asdict(p)
            d.update(ber=p.ber, fer=p.fer, mean_iters=p.mean_iters, ber_ci95=list(p.ber_interval()))
            pts.append(d)
        return json.dumps({"config": self.config, "points": pts}, indent=2)


# the worker state is set once per process
_STATE = {}


def _init_worker(cfg: SimConfig):
    _STATE["cfg"] = cfg


def _run_block(point, es_n0_db, block):
    """(bit errors, frame error, iterations) for one block."""
    cfg = _STATE["cfg"]
    c, code = cfg.constellation, cfg.code
    rng = substream(cfg.seed, point, block)
    info = rng.integers(0, 2, code.k, dtype=np.uint8)
    cw = code.encode(info)
    ch = ChannelSpec.from_es_n0_db(es_n0_db, c.dims)
    x = map_bits_to_symbols(c, cw)
    y = x + rng.normal(scale=ch.sigma, size=x.shape)
    llr = demapper.demap(c, y, ch.n0, cfg.demapper).reshape(-1)
    res = code.decode(llr, cfg.max_iterations)
    err = int(np.count_nonzero(res.bits[code.info_positions] != info))
    return err, int(np.any(res.bits != cw)), res.iterations


def _run_batch(args):
    point, es, blocks = args
    return [_run_block(point, es, b) for b in blocks]


def run_ber(cfg: SimConfig, progress=None) -> SimResult:
    """Simulate every Es/N0 point of ``cfg``.

    Blocks are drawn in index order; a point stops after the first block at
    which the bit-error count reaches ``min_errors`` or after ``max_blocks``.
    Each block's randomness depends only on (seed, point, block), and the
    stopping rule is applied in block order, so the result does not depend
    on the number of workers.
    """
    result = SimResult(cfg.echo())
    k = cfg.code.k
    pool = None
    workers = max(1, int(cfg.workers))
    if workers > 1:
        pool = ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(cfg,))
    else:
        _init_worker(cfg)
    per_task = 4
    try:
        for pi, es in enumerate(cfg.es_n0_db):
            t0 = time.perf_counter()
            pt = BerPoint(es, float(eb_n0_db(es, cfg.rate)), 0, 0, 0, 0, 0)
            nxt = 0
            done = False
            while not done and nxt < cfg.max_blocks:
                span = min(workers * per_task * (4 if pool else 1), cfg.max_blocks - nxt)
                idx = list(range(nxt, nxt + span))
                nxt += span
                tasks = [(pi, es, idx[i:i + per_task]) for i in range(0, span, per_task)]
                outs = pool.map(_run_batch, tasks) if pool else map(_run_batch, tasks)
                for batch in outs:
                    for err, ferr, it in batch:
                        if done:
                            break
                        pt.blocks += 1
                        pt.info_bits += k
                        pt.bit_errors += err
                        pt.frame_errors += ferr
                        pt.iterations += it
                        done = pt.bit_errors >= cfg.min_errors
            pt.wall_time = time.perf_counter() - t0
            result.points.append(pt)
            if progress:
                progress(pt)
    finally:
        if pool:
            pool.shutdown(cancel_futures=True)
    return result


def waterfall_snr(result: SimResult, target=WATERFALL_BER):
    """Es/N0 (dB) where BER first drops to ``target``.

    Interpolates log10(BER) linearly between the bracketing points; a zero
    BER is taken as half an error. Returns None if no point reaches the
    target and the first point if it is already below.
    """
    es = result.column("es_n0_db")
    ber = np.array([max(p.bit_errors, 0.5) / p.info_bits for p in result.points])
    hit = np.flatnonzero(ber <= target)
    if len(hit) == 0:
        return None
    i = hit[0]
    if i == 0:
        return float(es[0])
    l0, l1 = math.log10(ber[i - 1]), math.log10(ber[i])
    f = (l0 - math.log10(target)) / (l0 - l1)
    return float(es[i - 1] + f * (es[i] - es[i - 1]))


@dataclass(frozen=True)
class ThresholdReport:
    rate: float
    threshold_es_n0_db: float
    threshold_eb_n0_db: float
    measured_es_n0_db: float | None = None

    @property
    def gap_db(self):
        if self.measured_es_n0_db is None:
            return None
        return self.measured_es_n0_db - self.threshold_es_n0_db


def gmi_threshold_check(curve: rates.RateCurve, code_rate: float, measured=None) -> ThresholdReport:
    """Compare a measured waterfall SNR with the SNR where GMI = Rc * m.

    ``measured`` is an Es/N0 in dB, a :class:`SimResult` (its waterfall SNR
    is used) or None.
    """
    target = code_rate * curve.m
    if target > curve.m or not code_rate > 0:
        raise ValueError(f"rate {target:g} bit/symbol is unreachable for m={curve.m}")
    es = rates.es_n0_at_rate(curve, target, "gmi")
    if es is None:
        raise ValueError(f"GMI never reaches {target:g} bit/symbol on the grid (unreachable)")
    if isinstance(measured, SimResult):
        measured = waterfall_snr(measured)
    return ThresholdReport(target, es, float(eb_n0_db(es, target)), measured)


def default_workers():
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1
