"""Bit-wise soft demapping.

LLRs follow ``L_k = ln P(y | B_k = 1) - ln P(y | B_k = 0)`` (sums over the
points of each bit class), so a positive value favours bit 1. Outputs are
clipped to ``+-clip`` (default 50).
"""
import numpy as np

from bicm4d import _backend
from bicm4d.constellation import Constellation, PamAlphabet

CLIP = 50.0


def _as_batch(y, dims):
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    y = np.ascontiguousarray(np.atleast_2d(y))
    if y.shape[1] != dims:
        raise ValueError(f"received vector has {y.shape[1]} components, expected {dims}")
    return y, single


def _run(c, y, n0, clip, maxlog):
    if not n0 > 0:
        raise ValueError("n0 must be > 0")
    y, single = _as_batch(y, c.dims)
    out = _backend.kernels.llr(np.ascontiguousarray(c.points), np.ascontiguousarray(c.bits),
                               y, float(n0), float(clip), bool(maxlog))
    return out[0] if single else out


def llr_exact(c: Constellation, y, n0: float, clip: float = CLIP):
    """Exact (log-sum-exp) LLRs for one received vector (N,) or a batch (S, N)."""
    return _run(c, y, n0, clip, False)


def llr_maxlog(c: Constellation, y, n0: float, clip: float = CLIP):
    """Max-log LLRs: ``(min_{b=0} ||y-x||^2 - min_{b=1} ||y-x||^2) / N0``."""
    return _run(c, y, n0, clip, True)


def llr_factorized(alphabet, y, n0: float, clip: float = CLIP):
    """Per-dimension PAM LLRs for Gray-labeled Cartesian products.

    ``alphabet`` is a :class:`Constellation` built by
    :func:`~bicm4d.constellation.make_cartesian` (its per-dimension alphabet
    is used at the right scale) or a :class:`PamAlphabet` taken at face
    value. Bits come out in labeling order: dimension 1's group first.
    """
    if isinstance(alphabet, Constellation):
        if alphabet.pam is None:
            raise ValueError(f"{alphabet.name!r} is not a Gray-labeled Cartesian product")
        alphabet = alphabet.pam
    if not isinstance(alphabet, PamAlphabet):
        raise TypeError("expected a PamAlphabet or a Cartesian-product Constellation")
    if not n0 > 0:
        raise ValueError("n0 must be > 0")
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    y = np.atleast_2d(y)
    pts = np.ascontiguousarray(alphabet.levels[:, None])
    bits = np.ascontiguousarray(alphabet.bit_matrix)
    parts = [_backend.kernels.llr(pts, bits, np.ascontiguousarray(y[:, d:d + 1]), float(n0), float(clip), False)
             for d in range(y.shape[1])]
    out = np.concatenate(parts, axis=1)
    return out[0] if single else out


def demap(c: Constellation, y, n0, method="exact", clip: float = CLIP):
    """Dispatch on ``method``: ``exact``, ``maxlog`` or ``factorized``."""
    if method == "exact":
        return llr_exact(c, y, n0, clip)
    if method == "maxlog":
        return llr_maxlog(c, y, n0, clip)
    if method == "factorized":
        return llr_factorized(c, y, n0, clip)
    raise ValueError(f"unknown demapper {method!r}")
