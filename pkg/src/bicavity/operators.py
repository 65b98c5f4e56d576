"""Sparse operators and superoperators on the truncated QD-QD-bimodal-cavity space.

Basis convention
----------------
Composite ordering is (QD1, QD2, mode 1, mode 2) with the mode-2 index running
fastest.  QD levels are enumerated g=0, e=1. The flat index of the basis state
|q1, q2, n1, n2> is

    idx = ((q1*2 + q2) * (n_max_1+1) + n1) * (n_max_2+1) + n2

(for a single emitter the q2 factor is absent).  Density matrices are
vectorized column-major, vec(rho) = rho.flatten(order='F'), so the sandwich
A rho B maps to kron(B.T, A) acting on vec(rho).

Operators are assembled once and then treated as frozen; nothing in this
module mutates a matrix after construction, so they are safe to share across
worker processes.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
import scipy.sparse as sp

# Guard against accidentally huge superoperators: the vectorized dimension is
# dim**2 and a sparse LU of anything much past this is not going to fit.
DEFAULT_MAX_SUPEROP_DIM = 1_200_000

HERMITIAN_RTOL = 1e-12


class SpaceError(ValueError):
    """Invalid or oversized Hilbert-space specification."""


@dataclass(frozen=True)
class SpaceSpec:
    """Truncated composite Hilbert space: QDs x mode 1 x mode 2.

    n_max_i is the highest retained Fock level of mode i (levels 0..n_max_i).
    """

    n_emitters: int = 2
    n_max_1: int = 8
    n_max_2: int = 8

    def __post_init__(self):
        if self.n_emitters not in (1, 2):
            raise SpaceError(f"n_emitters must be 1 or 2, got {self.n_emitters}")
        if self.n_max_1 < 1 or self.n_max_2 < 1:
            raise SpaceError("photon truncations must be >= 1")

    @property
    def qd_dim(self) -> int:
        return 2 ** self.n_emitters

    @property
    def dim(self) -> int:
        return self.qd_dim * (self.n_max_1 + 1) * (self.n_max_2 + 1)


@dataclass(frozen=True)
class Basis:
    """Deterministic basis enumeration for a SpaceSpec."""

    spec: SpaceSpec
    states: tuple  # tuples (q1[, q2], n1, n2)

    @property
    def dim(self) -> int:
        return self.spec.dim

    def index(self, *state) -> int:
        spec = self.spec
        if spec.n_emitters == 2:
            q1, q2, n1, n2 = state
            qd = q1 * 2 + q2
        else:
            q1, n1, n2 = state
            qd = q1
        return (qd * (spec.n_max_1 + 1) + n1) * (spec.n_max_2 + 1) + n2


def build_space(spec: SpaceSpec, max_superop_dim: int = DEFAULT_MAX_SUPEROP_DIM) -> Basis:
    """Enumerate the basis; refuses spaces whose vectorized dimension is too big."""
    if spec.dim ** 2 > max_superop_dim:
        raise SpaceError(
            f"superoperator dimension {spec.dim ** 2} exceeds budget {max_superop_dim}; "
            "lower the photon truncation"
        )
    qd_states = product((0, 1), repeat=spec.n_emitters)
    states = tuple(
        qd + (n1, n2)
        for qd in qd_states
        for n1 in range(spec.n_max_1 + 1)
        for n2 in range(spec.n_max_2 + 1)
    )
    return Basis(spec=spec, states=states)


# ---------------------------------------------------------------------------
# elementary factors

def _boson_lowering(n_max: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, n_max + 1)), 1, format="csr", dtype=complex)


_SIGMA_MINUS = sp.csr_matrix(np.array([[0, 1], [0, 0]], dtype=complex))  # |g><e|


def _embed(spec: SpaceSpec, factors: dict) -> sp.csr_matrix:
    """Kron together per-subsystem factors, identity where unspecified.

    Keys: 'qd1', 'qd2', 'mode1', 'mode2'.
    """
    parts = []
    if spec.n_emitters == 2:
        order = ("qd1", "qd2", "mode1", "mode2")
    else:
        order = ("qd1", "mode1", "mode2")
    dims = {
        "qd1": 2,
        "qd2": 2,
        "mode1": spec.n_max_1 + 1,
        "mode2": spec.n_max_2 + 1,
    }
    for key in order:
        parts.append(factors.get(key, sp.identity(dims[key], dtype=complex, format="csr")))
    out = parts[0]
    for p in parts[1:]:
        out = sp.kron(out, p, format="csr")
    return out.tocsr()


def annihilator(spec: SpaceSpec, mode: int) -> sp.csr_matrix:
    """a_mode with a|n> = sqrt(n)|n-1>, identity on every other factor."""
    if mode not in (1, 2):
        raise ValueError("mode must be 1 or 2")
    n_max = spec.n_max_1 if mode == 1 else spec.n_max_2
    return _embed(spec, {f"mode{mode}": _boson_lowering(n_max)})


def creator(spec: SpaceSpec, mode: int) -> sp.csr_matrix:
    return annihilator(spec, mode).getH().tocsr()


def number_op(spec: SpaceSpec, mode: int) -> sp.csr_matrix:
    a = annihilator(spec, mode)
    return (a.getH() @ a).tocsr()


def qd_lowering(spec: SpaceSpec, emitter: int) -> sp.csr_matrix:
    """sigma^- of the given emitter: |g><e| on its factor."""
    if emitter not in (1, 2):
        raise ValueError("emitter must be 1 or 2")
    if emitter > spec.n_emitters:
        raise ValueError(f"emitter {emitter} not present (n_emitters={spec.n_emitters})")
    return _embed(spec, {f"qd{emitter}": _SIGMA_MINUS})


def qd_raising(spec: SpaceSpec, emitter: int) -> sp.csr_matrix:
    return qd_lowering(spec, emitter).getH().tocsr()


def qd_projector(spec: SpaceSpec, emitter: int, level: str) -> sp.csr_matrix:
    """|g><g| or |e><e| on one emitter."""
    idx = {"g": 0, "e": 1}[level]
    m = sp.csr_matrix(([1.0 + 0j], ([idx], [idx])), shape=(2, 2))
    return _embed(spec, {f"qd{emitter}": m})


# ---------------------------------------------------------------------------
# vectorization and superoperators (column-major convention)

def vectorize(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).flatten(order="F")


def unvectorize(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape((dim, dim), order="F")


def spre(A: sp.spmatrix) -> sp.csr_matrix:
    """A rho  ->  (I (x) A) vec(rho)."""
    d = A.shape[0]
    return sp.kron(sp.identity(d, dtype=complex, format="csr"), A, format="csr")


def spost(B: sp.spmatrix) -> sp.csr_matrix:
    """rho B  ->  (B^T (x) I) vec(rho)."""
    d = B.shape[0]
    return sp.kron(B.T, sp.identity(d, dtype=complex, format="csr"), format="csr")


def sandwich(A: sp.spmatrix, B: sp.spmatrix) -> sp.csr_matrix:
    """A rho B  ->  (B^T (x) A) vec(rho)."""
    return sp.kron(B.T, A, format="csr")


def trace_row(dim: int) -> sp.csr_matrix:
    """Row functional t with t @ vec(rho) = tr(rho)."""
    idx = np.arange(dim) * (dim + 1)
    data = np.ones(dim, dtype=complex)
    return sp.csr_matrix((data, (np.zeros(dim, dtype=int), idx)), shape=(1, dim * dim))


def is_hermitian(A: sp.spmatrix, rtol: float = HERMITIAN_RTOL) -> bool:
    diff = (A - A.getH()).tocoo()
    if diff.nnz == 0:
        return True
    scale = max(abs(A).max(), 1e-300)
    return bool(np.max(np.abs(diff.data)) <= rtol * scale)


def lindblad_dissipator(C: sp.spmatrix, rate: float) -> sp.csr_matrix:
    """D[C]rho = (rate/2) (2 C rho C^+  -  C^+C rho  -  rho C^+C).

    The prefactor matches the master equation convention in which every
    incoherent process enters as -(rate/2) L[C] with L the loss form, so the
    assembled generator can be compared term by term.
    """
    if rate < 0:
        raise ValueError(f"dissipator rate must be >= 0, got {rate}")
    d = C.shape[0]
    if rate == 0:
        return sp.csr_matrix((d * d, d * d), dtype=complex)
    Cd = C.getH()
    CdC = (Cd @ C).tocsr()
    out = sandwich(C, Cd) - 0.5 * (spre(CdC) + spost(CdC))
    return (rate * out).tocsr()


def commutator_superop(H: sp.spmatrix) -> sp.csr_matrix:
    """-i (H rho - rho H) in vectorized form; H must be Hermitian."""
    if not is_hermitian(H):
        raise ValueError("commutator_superop requires a Hermitian operator")
    return (-1j * (spre(H) - spost(H))).tocsr()


def commutator_superop_general(T: sp.spmatrix) -> sp.csr_matrix:
    """-i [T, rho] for a possibly non-Hermitian T.

    Trace-preserving on its own; maps Hermitian rho to Hermitian output only
    together with the partner channel built from T^dagger.
    """
    return (-1j * (spre(T) - spost(T))).tocsr()


def random_density_matrix(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Random full-rank Hermitian unit-trace positive matrix (test helper)."""
    G = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = G @ G.conj().T
    return rho / np.trace(rho)
