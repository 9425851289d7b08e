"""Vector AWGN channel and SNR bookkeeping.

Constellations are normalized to Es = 1, so the SNR enters only through
``N0``. Each noise component has variance ``N0/2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChannelSpec:
    n0: float
    dims: int

    def __post_init__(self):
        if not self.n0 > 0:
            raise ValueError(f"n0 must be > 0, got {self.n0}")

    @classmethod
    def from_es_n0_db(cls, es_n0_db, dims):
        return cls(es_n0_to_n0(es_n0_db), dims)

    @property
    def sigma(self):
        """Per-component noise standard deviation sqrt(N0/2)."""
        return math.sqrt(self.n0 / 2.0)


@dataclass(frozen=True)
class RatePoint:
    es_n0_db: float
    rate: float

    @property
    def eb_n0_db(self):
        return eb_n0_db(self.es_n0_db, self.rate)


def es_n0_to_n0(es_n0_db):
    """N0 for unit symbol energy: 10**(-Es/N0[dB]/10)."""
    if np.ndim(es_n0_db):
        return 10.0 ** (-np.asarray(es_n0_db, dtype=float) / 10.0)
    return 10.0 ** (-float(es_n0_db) / 10.0)


def eb_n0_db(es_n0_db, rate):
    """Eb/N0 in dB for transmission rate ``rate`` bit/symbol (Eb = Es/R)."""
    if np.any(np.asarray(rate) <= 0):
        raise ValueError("rate must be > 0")
    return es_n0_db - 10.0 * np.log10(rate)


def substream(seed, *index):
    """Independent generator for (master seed, stream index...).

    The same arguments always give the same stream, whatever process or
    order it is created in.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(i) for i in index))
    return np.random.Generator(np.random.PCG64(ss))


def add_noise(x, ch: ChannelSpec, rng: np.random.Generator):
    """Return ``x + z`` with z i.i.d. N(0, N0/2); ``x`` is (N,) or (S, N)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != ch.dims:
        raise ValueError(f"vector has {x.shape[-1]} components, channel has {ch.dims}")
    return x + rng.normal(scale=ch.sigma, size=x.shape)
