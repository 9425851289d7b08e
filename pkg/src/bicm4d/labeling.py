"""Binary labelings: relabeling and GMI-driven pairwise-swap search."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from bicm4d import rates
from bicm4d.channel import es_n0_to_n0, substream
from bicm4d.constellation import Constellation, _label_bits

# above this many doubles the search objective is evaluated without precomputation
_MAX_CACHE = 64 * 1024 * 1024


def apply_labeling(c: Constellation, perm, name=None) -> Constellation:
    """Relabel: the point carrying label ``l`` gets label ``perm[l]``."""
    perm = np.asarray(perm)
    if perm.shape != (c.M,) or not np.array_equal(np.sort(perm), np.arange(c.M)):
        raise ValueError("perm must be a permutation of 0..M-1")
    return c.with_labels(perm[c.labels], name)


@dataclass(frozen=True)
class LabelingSearchConfig:
    targets_db: tuple = (2.0, 4.0, 6.0, 8.0, 10.0)
    search_order: int = 6
    final_order: int = rates.DEFAULT_ORDER
    restarts: int = 3
    max_passes: int = 1000
    epsilon: float = 1e-5
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if not len(self.targets_db):
            raise ValueError("need at least one target SNR")


class GmiObjective:
    """Mean GMI over target SNRs for labelings of a fixed point set.

    The kernel weights ``D_ij`` do not depend on the labeling, so for small
    constellations they are tabulated once per SNR and a labeling costs one
    matrix product per SNR.
    """

    def __init__(self, c: Constellation, targets_db, order):
        self.c = c
        self.targets_db = tuple(float(t) for t in targets_db)
        self.grid = rates.quadrature_grid(order, c.dims)
        Q = len(self.grid.weights)
        self._tables = None
        if c.M * c.M * Q * len(self.targets_db) <= _MAX_CACHE:
            self._tables = [self._table(es_n0_to_n0(t)) for t in self.targets_db]

    def _table(self, n0):
        x = self.c.points
        z = math.sqrt(n0) * self.grid.nodes
        d = x[:, None, :] - x[None, :, :]
        e = -(np.sum(d * d, axis=2)[:, None, :] + 2.0 * np.einsum("ijn,qn->iqj", d, z)) / n0
        e -= e.max(axis=2, keepdims=True)
        w = np.exp(e)  # (M, Q, M)
        return w, np.log(w.sum(axis=2))

    def bit_mi(self, bits):
        """Per-target per-bit MI, shape (targets, m), for an (M, m) bit matrix."""
        if self._tables is None:
            c = self.c.with_labels(_labels_from_bits(bits))
            return np.array([rates.rate_terms(c, es_n0_to_n0(t), self.grid)[1] for t in self.targets_db])
        b = bits.astype(float)
        wq = self.grid.weights
        out = []
        for w, lall in self._tables:
            s1 = w @ b  # (M, Q, m) weight of label-bit 1 neighbours
            same = np.where(bits[:, None, :] == 1, s1, np.exp(lall)[:, :, None] - s1)
            term = np.einsum("q,iqk->ik", wq, lall[:, :, None] - np.log(same))
            out.append(1.0 - term.mean(axis=0) / math.log(2.0))
        return np.array(out)

    def __call__(self, bits):
        return float(np.mean(self.bit_mi(bits).sum(axis=1)))


def _labels_from_bits(bits):
    m = bits.shape[1]
    return (bits.astype(np.int64) << np.arange(m - 1, -1, -1)).sum(axis=1)


@dataclass
class RestartResult:
    index: int
    objective: float
    history: list = field(default_factory=list)
    labels: np.ndarray | None = None


@dataclass
class LabelingResult:
    constellation: Constellation
    objective: float
    restarts: list


def _climb(obj: GmiObjective, cfg: LabelingSearchConfig, r: int) -> RestartResult:
    c = obj.c
    rng = substream(cfg.seed, r)
    bits = _label_bits(rng.permutation(c.M), c.m)
    cur = obj(bits)
    hist = [cur]
    for _ in range(cfg.max_passes):
        best_val, best_pair = cur + cfg.epsilon, None
        for a in range(c.M - 1):
            for b in range(a + 1, c.M):
                bits[[a, b]] = bits[[b, a]]
                v = obj(bits)
                bits[[a, b]] = bits[[b, a]]
                if v > best_val:
                    best_val, best_pair = v, (a, b)
        if best_pair is None:
            break
        a, b = best_pair
        bits[[a, b]] = bits[[b, a]]
        cur = best_val
        hist.append(cur)
    return RestartResult(r, cur, hist, _labels_from_bits(bits))


_WORKER = {}


def _init_worker(c, cfg):
    _WORKER["obj"] = GmiObjective(c, cfg.targets_db, cfg.search_order)
    _WORKER["cfg"] = cfg


def _climb_worker(r):
    return _climb(_WORKER["obj"], _WORKER["cfg"], r)


def optimize_labeling(c: Constellation, cfg: LabelingSearchConfig = LabelingSearchConfig(), name=None,
                      workers: int = 1):
    """Best-improvement pairwise-swap hill climbing on the mean GMI.

    Each restart starts from a random labeling (substream ``(seed, r)``),
    scans all M(M-1)/2 swaps of two points' labels, applies the best one if
    it gains more than ``epsilon`` (ties go to the lowest index pair) and
    stops when a full scan finds none. The winner, chosen by objective then
    restart index, is re-scored at ``final_order``. Restarts are independent
    and may run in ``workers`` processes without changing the result.

    Returns a :class:`LabelingResult`; ``objective`` is the final-order mean
    GMI over the targets.
    """
    if workers > 1 and cfg.restarts > 1:
        with ProcessPoolExecutor(min(workers, cfg.restarts), initializer=_init_worker,
                                 initargs=(c, cfg)) as pool:
            runs = list(pool.map(_climb_worker, range(cfg.restarts)))
    else:
        obj = GmiObjective(c, cfg.targets_db, cfg.search_order)
        runs = [_climb(obj, cfg, r) for r in range(cfg.restarts)]
    best = max(runs, key=lambda run: (run.objective, -run.index))
    out = c.with_labels(best.labels, name)
    return LabelingResult(out, mean_gmi(out, cfg.targets_db, cfg.final_order), runs)


def mean_gmi(c: Constellation, targets_db, order=rates.DEFAULT_ORDER):
    grid = rates.quadrature_grid(order, c.dims)
    return math.fsum(math.fsum(rates.rate_terms(c, es_n0_to_n0(t), grid)[1]) for t in targets_db) / len(targets_db)
