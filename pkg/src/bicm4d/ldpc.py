"""Binary LDPC codes: alist I/O, systematic encoding and sum-product decoding.

Decoder LLRs use the same convention as :mod:`bicm4d.demapper`
(positive means bit 1).
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from bicm4d import _backend

DEFAULT_ITERATIONS = 50


class AlistError(ValueError):
    def __init__(self, msg, lineno=None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}" if lineno is not None else msg)


@dataclass(frozen=True)
class DecodeResult:
    bits: np.ndarray
    iterations: int
    converged: bool


def _gf2_rref(rows, n):
    """Reduced row echelon form over GF(2) on bit-packed rows.

    ``rows`` is a (r, words) uint64 array (column c is bit c % 64 of word
    c // 64). Returns (reduced rows, pivot columns); rank = len(pivots).
    """
    A = rows.copy()
    r = A.shape[0]
    pivots = []
    top = 0
    for c in range(n):
        if top == r:
            break
        w, b = divmod(c, 64)
        col = (A[top:, w] >> np.uint64(b)) & np.uint64(1)
        hit = np.flatnonzero(col)
        if len(hit) == 0:
            continue
        p = top + hit[0]
        if p != top:
            A[[top, p]] = A[[p, top]]
        mask = ((A[:, w] >> np.uint64(b)) & np.uint64(1)).astype(bool)
        mask[top] = False
        A[mask] ^= A[top]
        pivots.append(c)
        top += 1
    return A[:top], pivots


def _pack_rows(dense):
    r, n = dense.shape
    words = (n + 63) // 64
    padded = np.zeros((r, words * 64), dtype=np.uint8)
    padded[:, :n] = dense
    bits = padded.reshape(r, words, 64).astype(np.uint64)
    return (bits << np.arange(64, dtype=np.uint64)).sum(axis=2, dtype=np.uint64)


def _unpack_rows(packed, n):
    bits = (packed[:, :, None] >> np.arange(64, dtype=np.uint64)) & np.uint64(1)
    return bits.reshape(packed.shape[0], -1)[:, :n].astype(np.uint8)


class LdpcCode:
    """Parity-check code defined by a sparse H (checks x n).

    ``col_rows[v]`` lists the checks of variable ``v``. H is kept as given
    for decoding, redundant rows included; rank, k and the rate come from
    GF(2) elimination. The encoder is systematic: ``info_positions`` carry
    the message, ``parity_positions`` are the elimination pivots.
    """

    def __init__(self, n, checks, col_rows, name=""):
        self.n = int(n)
        self.checks = int(checks)
        self.name = name
        self.col_rows = [np.asarray(sorted(set(int(x) for x in r)), dtype=np.intp) for r in col_rows]
        if len(self.col_rows) != self.n:
            raise ValueError("col_rows must have one entry per variable")
        rows = [[] for _ in range(self.checks)]
        for v, rs in enumerate(self.col_rows):
            for c in rs:
                if not 0 <= c < self.checks:
                    raise ValueError(f"check index {c} out of range")
                rows[c].append(v)
        self.row_cols = [np.asarray(r, dtype=np.intp) for r in rows]

        # edge structures for the decoder, edges numbered in check order
        deg = np.array([len(r) for r in self.row_cols], dtype=np.intp)
        self.chk_ptr = np.concatenate([[0], np.cumsum(deg)]).astype(np.intp)
        self.edge_var = np.concatenate(self.row_cols).astype(np.intp) if self.checks else np.zeros(0, np.intp)
        self.var_edge = np.argsort(self.edge_var, kind="stable").astype(np.intp)
        vdeg = np.bincount(self.edge_var, minlength=self.n)
        self.var_ptr = np.concatenate([[0], np.cumsum(vdeg)]).astype(np.intp)
        self._build_encoder()

    @property
    def col_degrees(self):
        return np.array([len(r) for r in self.col_rows])

    @property
    def row_degrees(self):
        return np.array([len(r) for r in self.row_cols])

    @property
    def rate(self):
        return self.k / self.n

    def dense(self):
        H = np.zeros((self.checks, self.n), dtype=np.uint8)
        H[np.repeat(np.arange(self.checks), self.row_degrees), self.edge_var] = 1
        return H

    def syndrome(self, word):
        word = np.asarray(word, dtype=np.uint8)
        par = np.add.reduceat(word[..., self.edge_var].astype(np.int64), self.chk_ptr[:-1], axis=-1) & 1
        par[..., self.row_degrees == 0] = 0
        return par.astype(np.uint8)

    def _staircase(self):
        """True when the last ``checks`` columns form an accumulator (dual diagonal)."""
        m = self.checks
        if m == 0 or m >= self.n:
            return False
        k = self.n - m
        for j in range(m):
            want = [j, j + 1] if j < m - 1 else [j]
            if list(self.col_rows[k + j]) != want:
                return False
        return True

    def _build_encoder(self):
        m = self.checks
        if self._staircase():
            self.rank = m
            self.k = self.n - m
            self.info_positions = np.arange(self.k)
            self.parity_positions = np.arange(self.k, self.n)
            self._accumulate = True
            self._P = None
            return
        self._accumulate = False
        R, piv = _gf2_rref(_pack_rows(self.dense()), self.n)
        self.rank = len(piv)
        self.k = self.n - self.rank
        is_piv = np.zeros(self.n, dtype=bool)
        is_piv[piv] = True
        self.parity_positions = np.asarray(piv, dtype=np.intp)
        self.info_positions = np.flatnonzero(~is_piv)
        # row t of R reads: bit[piv[t]] = sum_j R[t, info_j] bit[info_j]
        self._P = _unpack_rows(R, self.n)[:, self.info_positions].astype(np.int32)

    def encode(self, info):
        """Systematic codeword(s) for ``info`` of shape (k,) or (B, k)."""
        info = np.asarray(info, dtype=np.uint8)
        if info.shape[-1] != self.k:
            raise ValueError(f"expected {self.k} info bits, got {info.shape[-1]}")
        cw = np.zeros(info.shape[:-1] + (self.n,), dtype=np.uint8)
        cw[..., self.info_positions] = info
        if self._accumulate:
            k = self.k
            # s_j = parity of info bits in check j; p_j = p_{j-1} xor s_j
            s = np.zeros(info.shape[:-1] + (self.checks,), dtype=np.int64)
            for j, cols in enumerate(self.row_cols):
                s[..., j] = info[..., cols[cols < k]].sum(axis=-1)
            cw[..., k:] = (np.cumsum(s, axis=-1) & 1).astype(np.uint8)
        else:
            cw[..., self.parity_positions] = ((info.astype(np.int32) @ self._P.T) & 1).astype(np.uint8)
        return cw

    def decode(self, llrs, max_iterations=DEFAULT_ITERATIONS):
        llrs = np.ascontiguousarray(llrs, dtype=float)
        if llrs.shape != (self.n,):
            raise ValueError(f"expected {self.n} LLRs, got shape {llrs.shape}")
        bits, it, ok = _backend.kernels.bp_decode(self.chk_ptr, self.edge_var, self.var_ptr,
                                                  self.var_edge, llrs, int(max_iterations))
        return DecodeResult(bits, it, ok)

    def __repr__(self):
        return f"LdpcCode({self.name!r}, n={self.n}, k={self.k}, checks={self.checks}, rate={self.rate:.4f})"


def encode(code: LdpcCode, info):
    return code.encode(info)


def decode_bp(code: LdpcCode, llrs, max_iterations: int = DEFAULT_ITERATIONS) -> DecodeResult:
    """Flooding sum-product decoding with early stop on a zero syndrome.

    ``converged`` also requires every posterior LLR to be nonzero: a bit
    with no information is not a decision.
    """
    return code.decode(llrs, max_iterations)


# --- alist ---------------------------------------------------------------------

def load_alist(path, name=None) -> LdpcCode:
    """Parse a MacKay alist file (1-based indices, zero padding allowed)."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        lines = [(i, ln.split()) for i, ln in enumerate(fh, start=1)]
    lines = [(i, t) for i, t in lines if t]

    def ints(idx, expect=None, what="entries"):
        if idx >= len(lines):
            raise AlistError(f"unexpected end of file reading {what}")
        lineno, tok = lines[idx]
        try:
            vals = [int(t) for t in tok]
        except ValueError:
            raise AlistError(f"non-integer {what}", lineno) from None
        if expect is not None and len(vals) != expect:
            raise AlistError(f"expected {expect} {what}, found {len(vals)}", lineno)
        return lineno, vals

    _, (n, m) = ints(0, 2, "header values (n m)")
    ints(1, 2, "maximum degrees")
    l3, cdeg = ints(2, n, "column degrees")
    l4, rdeg = ints(3, m, "row degrees")
    col_rows = []
    for v in range(n):
        lineno, vals = ints(4 + v, what=f"entries for column {v + 1}")
        nz = [x for x in vals if x != 0]
        if len(nz) != cdeg[v]:
            raise AlistError(f"column {v + 1} lists {len(nz)} checks, degree is {cdeg[v]}", lineno)
        if any(not 1 <= x <= m for x in nz):
            raise AlistError(f"check index out of range 1..{m}", lineno)
        col_rows.append([x - 1 for x in nz])
    edges_c = {(r, v) for v, rs in enumerate(col_rows) for r in rs}
    edges_r = set()
    for c in range(m):
        lineno, vals = ints(4 + n + c, what=f"entries for row {c + 1}")
        nz = [x for x in vals if x != 0]
        if len(nz) != rdeg[c]:
            raise AlistError(f"row {c + 1} lists {len(nz)} variables, degree is {rdeg[c]}", lineno)
        if any(not 1 <= x <= n for x in nz):
            raise AlistError(f"variable index out of range 1..{n}", lineno)
        edges_r.update((c, x - 1) for x in nz)
    if edges_c != edges_r:
        bad = sorted(edges_c ^ edges_r)[0]
        raise AlistError(f"row and column lists disagree at check {bad[0] + 1}, variable {bad[1] + 1}")
    return LdpcCode(n, m, col_rows, name=name or path.stem)


def save_alist(code: LdpcCode, path) -> None:
    cdeg, rdeg = code.col_degrees, code.row_degrees
    dv, dc = int(cdeg.max()), int(rdeg.max())
    out = [f"{code.n} {code.checks}", f"{dv} {dc}",
           " ".join(map(str, cdeg)), " ".join(map(str, rdeg))]
    for rs in code.col_rows:
        out.append(" ".join(str(x + 1) for x in rs) + " 0" * (dv - len(rs)))
    for cs in code.row_cols:
        out.append(" ".join(str(x + 1) for x in cs) + " 0" * (dc - len(cs)))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


# --- construction --------------------------------------------------------------

def peg_code(n, checks, col_weight=3, seed=0, name="") -> LdpcCode:
    """Progressive-edge-growth construction with constant column weight.

    Each new edge of a variable goes to a check at maximum distance in the
    current graph (an unreachable one if possible), lowest degree first;
    remaining ties are broken by a seeded generator.
    """
    rng = np.random.default_rng(seed)
    var_checks = [[] for _ in range(n)]
    chk_vars = [[] for _ in range(checks)]
    cdeg = np.zeros(checks, dtype=np.int64)

    def pick(candidates):
        cand = np.asarray(candidates)
        low = cand[cdeg[cand] == cdeg[cand].min()]
        return int(low[rng.integers(len(low))])

    for v in range(n):
        for e in range(col_weight):
            if e == 0:
                c = pick(np.arange(checks))
            else:
                # breadth-first over checks reachable from v
                seen = np.zeros(checks, dtype=bool)
                seen_v = {v}
                frontier = list(var_checks[v])
                seen[frontier] = True
                last = np.flatnonzero(~seen)
                while frontier:
                    nxt = []
                    for cc in frontier:
                        for u in chk_vars[cc]:
                            if u in seen_v:
                                continue
                            seen_v.add(u)
                            for c2 in var_checks[u]:
                                if not seen[c2]:
                                    seen[c2] = True
                                    nxt.append(c2)
                    if not nxt:
                        break
                    unreached = np.flatnonzero(~seen)
                    if len(unreached) == 0:
                        break
                    last = unreached
                    frontier = nxt
                avail = [c2 for c2 in last if c2 not in var_checks[v]]
                if not avail:
                    avail = [c2 for c2 in range(checks) if c2 not in var_checks[v]]
                c = pick(avail)
            var_checks[v].append(c)
            chk_vars[c].append(v)
            cdeg[c] += 1
    return LdpcCode(n, checks, var_checks, name=name)


# --- registry ------------------------------------------------------------------

SHIPPED_CODES = {
    "r1_4": "r1_4_n1008.alist",
    "r1_2": "r1_2_n1008.alist",
    "r3_4": "r3_4_n1008.alist",
    "r9_10": "r9_10_n1000.alist",
}


def code_dir():
    """Directory of bundled alist files (``BICM4D_DATA_DIR`` overrides)."""
    env = os.environ.get("BICM4D_DATA_DIR")
    if env:
        return Path(env) / "codes"
    return Path(str(resources.files("bicm4d"))) / "data" / "codes"


def builtin_code(name: str) -> LdpcCode:
    key = name.lower()
    if key not in SHIPPED_CODES:
        raise KeyError(f"unknown code {name!r}; known: {', '.join(SHIPPED_CODES)}")
    return load_alist(code_dir() / SHIPPED_CODES[key], name=key)


def resolve_code(name_or_path: str) -> LdpcCode:
    """A shipped code name or a path to an alist file."""
    if name_or_path.lower() in SHIPPED_CODES:
        return builtin_code(name_or_path)
    p = Path(name_or_path)
    if not p.is_file():
        raise FileNotFoundError(f"no alist file {name_or_path!r} (shipped codes: {', '.join(SHIPPED_CODES)})")
    return load_alist(p)
