"""Labeled multidimensional constellations.

A :class:`Constellation` holds ``M = 2**m`` points in ``N`` real dimensions
together with a binary labeling. Labels are stored as integers whose most
significant bit is bit ``k = 1`` (the first bit fed to the mapper).

Two-PAM sign convention: bit ``b`` maps to amplitude ``(1 - 2b) a``, so
bit 0 is the positive level.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.spatial.distance import pdist

# squared distances below this are treated as duplicate points
DUPLICATE_TOL = 1e-9


class ConstellationError(ValueError):
    """Invalid constellation contents."""


class ConstellationFileError(ConstellationError):
    """Malformed or invalid constellation file; carries the line number."""

    def __init__(self, msg, lineno=None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}" if lineno is not None else msg)


def _readonly(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PamAlphabet:
    """Gray-labeled, zero-mean PAM alphabet.

    ``levels[i]`` carries label ``labels[i]`` (integer, MSB first, ``bits``
    bits wide). Built by :func:`pam`; :meth:`scaled` gives the per-dimension
    alphabet of a normalized Cartesian product.
    """

    levels: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "levels", _readonly(self.levels, float))
        object.__setattr__(self, "labels", _readonly(self.labels, np.int64))

    @property
    def size(self):
        return len(self.levels)

    @property
    def bits(self):
        return int(round(math.log2(self.size)))

    @property
    def bit_matrix(self):
        return _label_bits(self.labels, self.bits)

    def scaled(self, factor):
        return PamAlphabet(self.levels * factor, self.labels)


def pam(size):
    """Unit-energy Gray-labeled PAM with ``size`` levels (a power of 2)."""
    b = int(round(math.log2(size)))
    if size < 2 or 2**b != size:
        raise ConstellationError(f"PAM size must be a power of 2, got {size}")

    def amp(label):
        # recursive Gray construction; bit 0 of each stage -> positive half
        bits = [(label >> (b - 1 - t)) & 1 for t in range(b)]
        v = 1 - 2 * bits[-1]
        for t in range(b - 2, -1, -1):
            v = (1 - 2 * bits[t]) * (2 ** (b - 1 - t) - v)
        return v

    labels = np.arange(size)
    levels = np.array([amp(l) for l in labels], dtype=float)
    levels /= math.sqrt(np.mean(levels**2))
    return PamAlphabet(levels, labels)


def _label_bits(labels, m):
    shifts = np.arange(m - 1, -1, -1)
    return ((np.asarray(labels)[:, None] >> shifts) & 1).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class Constellation:
    """``M`` points in ``dims`` real dimensions with an ``m``-bit labeling.

    Immutable; arrays are read-only. ``labels[i]`` is the integer label of
    ``points[i]``. ``pam`` is set for Gray-labeled Cartesian products built by
    :func:`make_cartesian` and holds the per-dimension alphabet at the
    constellation's own scale.
    """

    name: str
    points: np.ndarray
    labels: np.ndarray
    pam: PamAlphabet | None = field(default=None, repr=False)

    def __post_init__(self):
        pts = _readonly(self.points, float)
        if pts.ndim == 1:
            pts = _readonly(pts[:, None], float)
        labels = _readonly(self.labels, np.int64)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labels)
        M = len(pts)
        m = int(round(math.log2(M))) if M > 0 else 0
        if M < 2 or 2**m != M:
            raise ConstellationError(f"M = {M} is not a power of 2 (>= 2)")
        if labels.shape != (M,):
            raise ConstellationError(f"expected {M} labels, got shape {labels.shape}")
        if not np.array_equal(np.sort(labels), np.arange(M)):
            raise ConstellationError("labeling is not a bijection onto {0,1}^m")
        if not np.all(np.isfinite(pts)):
            raise ConstellationError("non-finite coordinates")
        if pdist(pts, "sqeuclidean").min() <= DUPLICATE_TOL:
            raise ConstellationError("duplicate points")

    @property
    def M(self):
        return len(self.points)

    @property
    def m(self):
        return int(round(math.log2(self.M)))

    @property
    def dims(self):
        return self.points.shape[1]

    @property
    def energy(self):
        """Average symbol energy (1/M) sum ||x_i||^2."""
        return float(np.mean(np.sum(self.points**2, axis=1)))

    @cached_property
    def bits(self):
        """(M, m) uint8 matrix; ``bits[i, k]`` is bit k+1 of point i's label."""
        b = _label_bits(self.labels, self.m)
        b.setflags(write=False)
        return b

    @cached_property
    def index_of_label(self):
        inv = np.empty(self.M, dtype=np.int64)
        inv[self.labels] = np.arange(self.M)
        inv.setflags(write=False)
        return inv

    def label_strings(self):
        return [format(int(l), f"0{self.m}b") for l in self.labels]

    @cached_property
    def geometry(self):
        """Pairwise squared distances and per-point neighbor order (kernel input)."""
        diff = self.points[:, None, :] - self.points[None, :, :]
        dist2 = np.ascontiguousarray(np.sum(diff**2, axis=2))
        order = np.ascontiguousarray(np.argsort(dist2, axis=1, kind="stable")).astype(np.intp)
        return dist2, order

    def with_labels(self, labels, name=None):
        return Constellation(name or self.name, self.points, labels)


def make_cartesian(alphabet: PamAlphabet, dims: int, name=None) -> Constellation:
    """Gray-labeled ``dims``-fold Cartesian product of a PAM alphabet.

    Bit group k (``alphabet.bits`` bits, most significant group first)
    selects the level in dimension k. The result has unit average energy.
    """
    if dims < 1:
        raise ConstellationError("dims must be >= 1")
    b = alphabet.bits
    M = alphabet.size**dims
    labels = np.arange(M)
    level_of = np.empty(alphabet.size)
    level_of[alphabet.labels] = alphabet.levels
    pts = np.empty((M, dims))
    for d in range(dims):
        group = (labels >> (b * (dims - 1 - d))) & (alphabet.size - 1)
        pts[:, d] = level_of[group]
    scale = 1.0 / math.sqrt(np.mean(np.sum(pts**2, axis=1)))
    if name is None:
        name = f"{alphabet.size}-pam^{dims}"
    return Constellation(name, pts * scale, labels, pam=alphabet.scaled(scale))


def normalize(c: Constellation) -> Constellation:
    """Scaled copy with unit average symbol energy; labels unchanged."""
    es = c.energy
    if es <= 0.0:
        raise ConstellationError("cannot normalize an all-zero constellation")
    s = 1.0 / math.sqrt(es)
    pam_ = c.pam.scaled(s) if c.pam is not None else None
    return Constellation(c.name, c.points * s, c.labels, pam=pam_)


def min_squared_distance(c: Constellation) -> float:
    return float(pdist(c.points, "sqeuclidean").min())


def asymptotic_gain_db(c: Constellation, ref: Constellation) -> float:
    """Asymptotic power gain of ``c`` over ``ref`` in dB, 10 log10(d2min ratio).

    Computed on energy-normalized copies, so it does not depend on the input
    scaling. Only meaningful at equal ``m``.
    """
    if c.m != ref.m:
        raise ConstellationError(f"mismatched bits per symbol: {c.m} vs {ref.m}")
    g = (min_squared_distance(c) / c.energy) / (min_squared_distance(ref) / ref.energy)
    return 10.0 * math.log10(g)


# --- files -----------------------------------------------------------------

def load_constellation(path, name=None) -> Constellation:
    """Read a constellation file and return it energy-normalized.

    Format: ``#`` comments, a header line ``N M``, then ``M`` lines
    ``label x_1 ... x_N`` with ``label`` an ``m``-character bit string.
    """
    path = Path(path)
    rows = []
    header = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            if header is None:
                if len(tok) != 2:
                    raise ConstellationFileError("header must be 'N M'", lineno)
                try:
                    N, M = int(tok[0]), int(tok[1])
                except ValueError:
                    raise ConstellationFileError(f"bad header {line!r}", lineno) from None
                m = int(round(math.log2(M))) if M > 0 else -1
                if N < 1:
                    raise ConstellationFileError(f"N must be >= 1, got {N}", lineno)
                if M < 2 or 2**m != M:
                    raise ConstellationFileError(f"M = {M} is not a power of 2", lineno)
                header = (N, M, m, lineno)
                continue
            N, M, m, _ = header
            if len(tok) != N + 1:
                raise ConstellationFileError(f"expected label and {N} coordinates, got {len(tok)} fields", lineno)
            lab = tok[0]
            if len(lab) != m or set(lab) - {"0", "1"}:
                raise ConstellationFileError(f"label {lab!r} is not a {m}-bit string", lineno)
            try:
                coords = [float(t) for t in tok[1:]]
            except ValueError:
                raise ConstellationFileError(f"bad coordinate in {line!r}", lineno) from None
            rows.append((lineno, lab, coords))
    if header is None:
        raise ConstellationFileError("missing 'N M' header")
    N, M, m, hline = header
    if len(rows) != M:
        raise ConstellationFileError(f"header declares {M} points, found {len(rows)}", hline)
    seen = {}
    for lineno, lab, _ in rows:
        if lab in seen:
            raise ConstellationFileError(f"duplicate label {lab} (first on line {seen[lab]})", lineno)
        seen[lab] = lineno
    pts = np.array([r[2] for r in rows])
    d2 = np.sum((pts[:, None] - pts[None]) ** 2, axis=2)
    np.fill_diagonal(d2, np.inf)
    if d2.min() <= DUPLICATE_TOL:
        i, j = np.unravel_index(np.argmin(d2), d2.shape)
        i, j = sorted((i, j))
        raise ConstellationFileError(f"point duplicates the one on line {rows[i][0]}", rows[j][0])
    labels = [int(r[1], 2) for r in rows]
    c = Constellation(name or path.stem, pts, labels)
    return normalize(c)


def save_constellation(c: Constellation, path) -> None:
    path = Path(path)
    if str(path) in ("", "."):
        raise FileNotFoundError("empty output path")
    lines = [f"# {c.name}", f"{c.dims} {c.M}"]
    for lab, p in zip(c.label_strings(), c.points):
        lines.append(lab + " " + " ".join(repr(float(v)) for v in p))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


# --- registry ----------------------------------------------------------------

BUILTIN_FILES = {
    "c4_16": "c4_16.txt",
    "so-pm-qpsk": "so_pm_qpsk.txt",
    "c4_256": "c4_256.txt",
}
GENERATORS = {
    "pm-qpsk": lambda: make_cartesian(pam(2), 4, "pm-qpsk"),
    "pm-16qam": lambda: make_cartesian(pam(4), 4, "pm-16qam"),
    "qpsk": lambda: make_cartesian(pam(2), 2, "qpsk"),
    "2-pam": lambda: make_cartesian(pam(2), 1, "2-pam"),
}
SHIPPED = ("pm-qpsk", "c4_16", "so-pm-qpsk", "pm-16qam", "c4_256")


def data_dir():
    """Directory of bundled constellation files (``BICM4D_DATA_DIR`` overrides)."""
    env = os.environ.get("BICM4D_DATA_DIR")
    if env:
        return Path(env) / "constellations"
    return Path(str(resources.files("bicm4d"))) / "data" / "constellations"


def builtin(name: str) -> Constellation:
    """Resolve a built-in name to a generated or bundled constellation."""
    key = name.lower()
    if key in GENERATORS:
        return GENERATORS[key]()
    if key in BUILTIN_FILES:
        return load_constellation(data_dir() / BUILTIN_FILES[key], name=key)
    known = ", ".join(sorted([*GENERATORS, *BUILTIN_FILES]))
    raise KeyError(f"unknown constellation {name!r}; known: {known}")
