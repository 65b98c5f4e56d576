"""Excitation-difference blocks of the vectorized master equation.

Every term of both master equations is built from operators that conserve the
total excitation number N (excitons plus photons), either one-sidedly balanced
(H, C+C, the dressed phonon products) or as matched sandwich pairs (C rho C+).
The generator therefore never couples ket-bra sectors with different
dN = N(ket) - N(bra): it is block diagonal in dN.

The steady state lives entirely in the dN = 0 block and first-order field
correlations like a rho evolve inside dN = -1, which shrinks the linear
algebra from dim^2 unknowns to a few percent of that.  This module builds the
index maps and assembles channel terms restricted to one block.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .liouvillian import LiouvillianChannel, MasterEquation, excitation_numbers
from .operators import SpaceSpec

_CHUNK_PAIRS = 4_000_000


@dataclass(frozen=True)
class SectorIndex:
    """Index map of one dN block inside the column-major vectorized space."""

    space: SpaceSpec
    sector: int
    vec_indices: np.ndarray   # global vec positions, ascending
    rows: np.ndarray          # ket index r of each block element
    cols: np.ndarray          # bra index c of each block element
    lookup: np.ndarray        # global vec position -> block position (-1 outside)

    @property
    def size(self) -> int:
        return self.vec_indices.size

    def extract(self, vec: np.ndarray) -> np.ndarray:
        return np.asarray(vec)[self.vec_indices]

    def embed(self, block_vec: np.ndarray) -> np.ndarray:
        dim = self.space.dim
        out = np.zeros(dim * dim, dtype=complex)
        out[self.vec_indices] = block_vec
        return out

    def diagonal_positions(self) -> np.ndarray:
        """Block positions of the matrix-diagonal elements (dN = 0 only)."""
        if self.sector != 0:
            raise ValueError("matrix diagonal lives in the dN = 0 block")
        dim = self.space.dim
        pos = self.lookup[np.arange(dim) * (dim + 1)]
        if np.any(pos < 0):
            raise RuntimeError("diagonal element missing from dN=0 block")
        return pos


@lru_cache(maxsize=32)
def sector_index(space: SpaceSpec, sector: int) -> SectorIndex:
    n_exc = excitation_numbers(space)
    dim = space.dim
    # vec position v = c*dim + r; enumerate in ascending v order
    diff = n_exc[:, None] - n_exc[None, :]        # [r, c] = N(r) - N(c)
    cols, rows = np.nonzero((diff == sector).T)   # sorted by c, then r
    vec_idx = cols * dim + rows
    lookup = np.full(dim * dim, -1, dtype=np.int64)
    lookup[vec_idx] = np.arange(vec_idx.size)
    return SectorIndex(space=space, sector=sector, vec_indices=vec_idx,
                       rows=rows, cols=cols, lookup=lookup)


def _restrict_pair(A: sp.spmatrix | None, B: sp.spmatrix | None,
                   idx: SectorIndex, dim: int):
    """COO triplets of the block of A rho B (identity where A or B is None)."""
    if A is None:
        A = sp.identity(dim, dtype=complex, format="coo")
    else:
        A = A.tocoo()
    if B is None:
        B = sp.identity(dim, dtype=complex, format="coo")
    else:
        B = B.tocoo()
    # (B^T kron A)[(c'd+r'),(c d+r)] = B[c, c'] A[r', r]
    nnz_a, nnz_b = A.nnz, B.nnz
    if nnz_a == 0 or nnz_b == 0:
        return (np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, complex))
    out_r, out_c, out_v = [], [], []
    chunk = max(1, _CHUNK_PAIRS // nnz_b)
    for lo in range(0, nnz_a, chunk):
        hi = min(nnz_a, lo + chunk)
        ar = np.repeat(A.row[lo:hi], nnz_b)     # r'
        ac = np.repeat(A.col[lo:hi], nnz_b)     # r
        av = np.repeat(A.data[lo:hi], nnz_b)
        br = np.tile(B.row, hi - lo)            # c
        bc = np.tile(B.col, hi - lo)            # c'
        bv = np.tile(B.data, hi - lo)
        src = idx.lookup[br * dim + ac]
        dst = idx.lookup[bc * dim + ar]
        keep = (src >= 0) & (dst >= 0)
        if np.any(keep):
            out_r.append(dst[keep])
            out_c.append(src[keep])
            out_v.append((av * bv)[keep])
    if not out_r:
        return (np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, complex))
    return (np.concatenate(out_r), np.concatenate(out_c), np.concatenate(out_v))


def restrict_channel(channel: LiouvillianChannel, idx: SectorIndex) -> sp.csr_matrix:
    """Assemble one channel's superoperator restricted to a dN block."""
    dim = idx.space.dim
    rows, cols, vals = [], [], []
    for t in channel.terms:
        if t.kind == "pre":
            r, c, v = _restrict_pair(t.left, None, idx, dim)
        elif t.kind == "post":
            r, c, v = _restrict_pair(None, t.right, idx, dim)
        else:
            r, c, v = _restrict_pair(t.left, t.right, idx, dim)
        rows.append(r)
        cols.append(c)
        vals.append(t.coeff * v)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    out = sp.coo_matrix((vals, (rows, cols)), shape=(idx.size, idx.size))
    return out.tocsr()


def assemble_sector(me: MasterEquation, sector: int = 0,
                    channels: list[LiouvillianChannel] | None = None) -> tuple[sp.csr_matrix, SectorIndex]:
    """Total generator restricted to one dN block."""
    idx = sector_index(me.space, sector)
    chans = me.channels if channels is None else channels
    out = None
    for ch in chans:
        blk = restrict_channel(ch, idx)
        out = blk if out is None else out + blk
    return out.tocsr(), idx


def sector_leakage(me: MasterEquation, sector: int = 0) -> float:
    """Largest coupling out of a block; zero when the conservation law holds.

    Diagnostic for tests: assembles the full generator, so only use at small
    dimensions.
    """
    idx = sector_index(me.space, sector)
    L = me.total.tocsc()
    outside = np.setdiff1d(np.arange(me.dim ** 2), idx.vec_indices)
    sub = L[:, idx.vec_indices][outside, :]
    return 0.0 if sub.nnz == 0 else float(np.abs(sub.data).max())
