"""Steady states, propagation, two-time correlations and emission spectra.

The steady state is found by sparse LU on the generator with one redundant
row replaced by the trace constraint (the trace functional is a left null
vector, so exactly one row is dependent).  When a MasterEquation is passed,
the solve runs inside the dN = 0 excitation-difference block, which is both
exact and far smaller than the full vectorized space.

Spectra follow the quantum regression pipeline: C(t) = tr[a+ e^{Lt}(a rho)],
one-sided Fourier transform of the sampled series, then a Lorentzian fit with
a constant offset.  For large systems C(t) is evaluated from an Arnoldi
reduction of the dN = -1 block, grown until the fitted linewidth is stable.
Frequencies are reported relative to the QD rotating frame with the
e^{-i w t} transform convention, so a bare cavity line sits at w = -delta.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import curve_fit

from .liouvillian import MasterEquation
from .operators import annihilator, trace_row, unvectorize, vectorize
from .sectors import SectorIndex, assemble_sector, sector_index

RESIDUAL_TOL = 1e-8
POSITIVITY_FLOOR = -1e-8
CORR_DECAY_TOL = 1e-4


class SteadyStateError(RuntimeError):
    pass


class DegenerateSteadyStateError(SteadyStateError):
    def __init__(self, null_dim):
        self.null_dim = null_dim
        super().__init__(f"steady state not unique: null-space dimension {null_dim}")


class EvolveError(RuntimeError):
    pass


class SpectrumError(RuntimeError):
    pass


@dataclass
class SteadyState:
    rho: np.ndarray
    residual: float
    method: str
    iterations: int | None
    min_eig: float

    @property
    def trace(self) -> float:
        return float(np.trace(self.rho).real)


def _block_trace_vector(idx: SectorIndex) -> np.ndarray:
    t = np.zeros(idx.size, dtype=complex)
    t[idx.diagonal_positions()] = 1.0
    return t


def _inverse_power_solve(L_blk: sp.csr_matrix, start: np.ndarray,
                         residual_tol: float, max_iter: int = 8):
    """Null vector by inverse power iteration on a tiny-shifted factorization.

    The shift keeps the factorization non-singular; every other Liouvillian
    eigenvalue is separated by the physical damping rates, so the iteration
    contracts onto the kernel by orders of magnitude per step.
    """
    scale = float(np.abs(L_blk.data).max()) if L_blk.nnz else 1.0
    sigma = 1e-9 * scale
    lu = spla.splu((L_blk - sigma * sp.identity(L_blk.shape[0], dtype=complex,
                                                format="csr")).tocsc())
    x = start / np.linalg.norm(start)
    for it in range(1, max_iter + 1):
        x = lu.solve(x)
        nx = np.linalg.norm(x)
        if not np.isfinite(nx) or nx == 0:
            raise SteadyStateError("inverse iteration diverged (singular shift)")
        x = x / nx
        res = float(np.linalg.norm(L_blk @ x))
        if res <= 0.01 * residual_tol or res <= 1e-13:
            return x, it, res
    return x, max_iter, res


def _bordered_solve(L_blk: sp.csr_matrix, trace_vec: np.ndarray, border_row: int):
    """Trace-constrained direct solve; border placed last to protect the LU
    ordering.  Fallback path and uniqueness probe."""
    n = L_blk.shape[0]
    border = sp.csr_matrix((trace_vec, (np.zeros(trace_vec.size, dtype=int),
                                        np.arange(n))), shape=(1, n))
    keep = np.ones(n, dtype=bool)
    keep[border_row] = False
    rows = np.flatnonzero(keep)
    M = sp.vstack([L_blk[rows], border]).tocsc()
    rhs = np.zeros(n, dtype=complex)
    rhs[-1] = 1.0
    try:
        lu = spla.splu(M)
        return lu.solve(rhs), "bordered-lu", None
    except (RuntimeError, MemoryError):
        try:
            ilu = spla.spilu(M, drop_tol=1e-6, fill_factor=20)
            prec = spla.LinearOperator(M.shape, ilu.solve)
        except (RuntimeError, MemoryError):
            prec = None
        counter = {"n": 0}

        def _cb(_):
            counter["n"] += 1

        x, info = spla.lgmres(M, rhs, M=prec, rtol=1e-12, atol=0.0, maxiter=2000,
                              callback=_cb)
        if info != 0:
            raise SteadyStateError(f"iterative steady-state solve failed (info={info})")
        return x, "lgmres", counter["n"]


def _estimate_null_dim(L_blk: sp.csr_matrix) -> int | str:
    if L_blk.shape[0] <= 3000:
        sv = np.linalg.svd(L_blk.toarray(), compute_uv=False)
        return int(np.sum(sv < 1e-10 * max(sv[0], 1e-300)))
    return ">= 2"


def steady_state(system: MasterEquation | sp.spmatrix, *,
                 verify_unique: bool = False,
                 residual_tol: float = RESIDUAL_TOL) -> SteadyState:
    """Unit-trace null vector of the generator, Hermitized before checks.

    Raises on residual failure and, with ``verify_unique``, on a degenerate
    null space (detected by solving with two different borderings).
    """
    if isinstance(system, MasterEquation):
        L_blk, idx = assemble_sector(system, 0)
        dim = system.dim
        trace_vec = _block_trace_vector(idx)
        diag_pos = idx.diagonal_positions()
        embed = idx.embed
    else:
        L_blk = system.tocsr()
        dim = int(round(np.sqrt(L_blk.shape[0])))
        trace_vec = trace_row(dim).toarray().ravel()
        diag_pos = np.arange(dim) * (dim + 1)
        embed = lambda v: v

    try:
        x, iters, _ = _inverse_power_solve(L_blk, trace_vec.copy(), residual_tol)
        method = "shift-invert-power"
    except (SteadyStateError, RuntimeError, MemoryError):
        x, method, iters = _bordered_solve(L_blk, trace_vec,
                                           border_row=int(diag_pos[0]))
    norm_x = np.linalg.norm(x)
    if norm_x == 0 or not np.all(np.isfinite(x)):
        raise SteadyStateError("singular system (no finite solution)")
    residual = float(np.linalg.norm(L_blk @ x) / norm_x)
    if residual > residual_tol:
        null_dim = _estimate_null_dim(L_blk)
        if isinstance(null_dim, int) and null_dim > 1:
            raise DegenerateSteadyStateError(null_dim)
        raise SteadyStateError(
            f"steady-state residual {residual:.2e} exceeds {residual_tol:.0e}")
    tr_x = trace_vec @ x
    if abs(tr_x) < 1e-12 * norm_x:
        raise SteadyStateError("null vector is traceless; generator is defective")

    if verify_unique and diag_pos.size > 1:
        rng = np.random.default_rng(20240811)
        probe = rng.normal(size=x.size) + 1j * rng.normal(size=x.size)
        x2, _, _ = _inverse_power_solve(L_blk, probe, residual_tol)
        tr_x2 = trace_vec @ x2
        if abs(tr_x2) < 1e-12 * np.linalg.norm(x2):
            raise DegenerateSteadyStateError(_estimate_null_dim(L_blk))
        rho_a = unvectorize(embed(x / tr_x), dim)
        rho_b = unvectorize(embed(x2 / tr_x2), dim)
        d = 0.5 * np.sum(np.abs(np.linalg.eigvalsh(
            0.5 * (rho_a + rho_a.conj().T) - 0.5 * (rho_b + rho_b.conj().T))))
        if d > 1e-6:
            raise DegenerateSteadyStateError(_estimate_null_dim(L_blk))

    rho = unvectorize(embed(x / tr_x), dim)   # fixes the arbitrary null-vector phase
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    min_eig = float(np.linalg.eigvalsh(rho)[0])
    return SteadyState(rho=rho, residual=residual, method=method,
                       iterations=iters, min_eig=min_eig)


# ---------------------------------------------------------------------------
# propagation

def _propagate_grid(L: sp.spmatrix, v0: np.ndarray, t_grid: np.ndarray) -> np.ndarray:
    """e^{L t} v0 sampled on an ascending grid (uniform grids in one call)."""
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be ascending")
    out = np.empty((t.size, v0.size), dtype=complex)
    dt = np.diff(t)
    uniform = t.size > 2 and np.allclose(dt, dt[0], rtol=1e-12, atol=0.0)
    v_start = v0 if t[0] == 0 else spla.expm_multiply((t[0] * L).tocsc(), v0)
    out[0] = v_start
    if t.size == 1:
        return out
    if uniform:
        res = spla.expm_multiply(L.tocsc(), v_start, start=0.0,
                                 stop=float(t[-1] - t[0]), num=t.size, endpoint=True)
        return res.astype(complex) if t[0] == 0 else np.vstack([out[0], res[1:]])
    v = v_start
    for k, step in enumerate(dt, start=1):
        v = spla.expm_multiply((step * L).tocsc(), v)
        out[k] = v
    return out


def evolve(L: sp.spmatrix, rho0: np.ndarray, t_grid) -> np.ndarray:
    """Density-matrix trajectory rho(t); trace kept to 1e-8 or EvolveError."""
    dim = rho0.shape[0]
    traj = _propagate_grid(L, vectorize(rho0), np.asarray(t_grid, dtype=float))
    rhos = traj.reshape(-1, dim, dim).transpose(0, 2, 1)  # undo column-major
    traces = np.einsum("tii->t", rhos)
    drift = float(np.max(np.abs(traces - traces[0])))
    if drift > 1e-8:
        raise EvolveError(f"propagation accuracy loss: trace drift {drift:.2e} "
                          "(step-size underflow)")
    return rhos


def two_time_correlation(L: sp.spmatrix, rho_ss: np.ndarray, A: sp.spmatrix,
                         B: sp.spmatrix, t_grid) -> np.ndarray:
    """C(t) = tr[A e^{Lt}(B rho_ss)] via the regression theorem."""
    v0 = vectorize((B @ rho_ss))
    w = vectorize(np.asarray(A.todense()).T if sp.issparse(A) else np.asarray(A).T)
    traj = _propagate_grid(L, v0, np.asarray(t_grid, dtype=float))
    return traj @ w


# ---------------------------------------------------------------------------
# spectra

@dataclass
class Spectrum:
    omega: np.ndarray
    values: np.ndarray
    center: float
    fwhm: float
    amplitude: float
    offset: float
    fit_residual: float
    non_lorentzian: bool
    meta: dict = field(default_factory=dict)

    def lorentzian(self, omega) -> np.ndarray:
        w = np.asarray(omega, dtype=float)
        half = self.fwhm / 2.0
        return self.amplitude * half**2 / ((w - self.center) ** 2 + half**2) + self.offset


def _lorentz(w, amp, center, fwhm, offset):
    half = fwhm / 2.0
    return amp * half**2 / ((w - center) ** 2 + half**2) + offset


def spectrum_and_linewidth(corr: np.ndarray, t_grid: np.ndarray, *,
                           zero_pad: int = 8, decay_tol: float = CORR_DECAY_TOL,
                           window_fwhm: float = 20.0) -> Spectrum:
    """One-sided transform S(w) = Re int C(t) e^{-iwt} dt and Lorentzian fit.

    Requires the sampled correlation to have decayed below ``decay_tol`` of
    |C(0)|; a fit residual above 10% of the peak flags a non-Lorentzian line
    (the raw data is still returned).
    """
    C = np.asarray(corr, dtype=complex)
    t = np.asarray(t_grid, dtype=float)
    if C.shape != t.shape or C.ndim != 1 or C.size < 16:
        raise ValueError("corr and t_grid must be matching 1-D arrays")
    dt = np.diff(t)
    if np.any(dt <= 0) or not np.allclose(dt, dt[0], rtol=1e-9, atol=0.0):
        raise ValueError("spectrum needs a uniform ascending time grid")
    dt = float(dt[0])
    c0 = abs(C[0])
    if c0 == 0:
        raise SpectrumError("C(0) = 0: nothing to transform")
    tail = np.abs(C[-max(4, C.size // 16):]).max()
    if tail > decay_tol * c0:
        raise SpectrumError(
            f"correlation has not decayed: tail/C(0) = {tail / c0:.2e} > "
            f"{decay_tol:.0e}; extend t_max")

    n_fft = int(2 ** np.ceil(np.log2(C.size * zero_pad)))
    spec = dt * (np.fft.fft(C, n=n_fft) - 0.5 * C[0])   # trapezoid end correction
    omega = 2 * np.pi * np.fft.fftfreq(n_fft, dt)
    order = np.argsort(omega)
    omega = omega[order]
    S = spec.real[order]

    i_pk = int(np.argmax(S))
    peak = S[i_pk]
    base = float(np.median(S))
    half_level = base + 0.5 * (peak - base)
    i_lo = i_pk
    while i_lo > 0 and S[i_lo] > half_level:
        i_lo -= 1
    i_hi = i_pk
    while i_hi < S.size - 1 and S[i_hi] > half_level:
        i_hi += 1
    fwhm0 = max(omega[i_hi] - omega[i_lo], 4 * (omega[1] - omega[0]))

    center, fwhm, amp, offset, resid = omega[i_pk], fwhm0, peak - base, base, np.inf
    for _ in range(2):
        mask = np.abs(omega - center) <= window_fwhm * fwhm
        if mask.sum() < 8:
            mask = np.abs(omega - center) <= 20 * (omega[1] - omega[0])
        try:
            popt, _ = curve_fit(
                _lorentz, omega[mask], S[mask],
                p0=(max(amp, 1e-30), center, fwhm, offset),
                bounds=([0.0, omega[0], 1e-12, -np.inf],
                        [np.inf, omega[-1], omega[-1] - omega[0], np.inf]),
                maxfev=20000)
        except RuntimeError as exc:
            raise SpectrumError(f"Lorentzian fit failed: {exc}") from exc
        amp, center, fwhm, offset = popt
        resid = float(np.sqrt(np.mean((S[mask] - _lorentz(omega[mask], *popt)) ** 2))
                      / max(peak - base, 1e-300))
    return Spectrum(omega=omega, values=S, center=float(center), fwhm=float(fwhm),
                    amplitude=float(amp), offset=float(offset), fit_residual=resid,
                    non_lorentzian=bool(resid > 0.10),
                    meta={"min_over_max": float(S.min() / max(S.max(), 1e-300)),
                          "c0": c0, "dt": dt, "t_max": float(t[-1])})


def _arnoldi_extend(L, V, H, start, stop):
    """Grow an Arnoldi factorization in place; returns effective size."""
    n = V.shape[0]
    for j in range(start, stop):
        w = L @ V[:, j]
        for i in range(j + 1):
            h = np.vdot(V[:, i], w)
            H[i, j] += h
            w -= h * V[:, i]
        for i in range(j + 1):  # one re-orthogonalization pass
            c = np.vdot(V[:, i], w)
            H[i, j] += c
            w -= c * V[:, i]
        beta = np.linalg.norm(w)
        H[j + 1, j] = beta
        if beta < 1e-13 * max(np.abs(H).max(), 1.0):
            return j + 1  # invariant subspace: reduction is exact
        V[:, j + 1] = w / beta
    return stop


def emission_spectrum(me: MasterEquation, steady: SteadyState, mode: int, *,
                      n_window: int = 512, max_windows: int = 256,
                      decay_tol: float = CORR_DECAY_TOL,
                      krylov_start: int = 200, krylov_max: int = 640,
                      fwhm_rtol: float = 0.01) -> Spectrum:
    """Spectrum of one cavity mode from the steady state of a master equation.

    The first-order coherence a rho_ss lives in the dN = -1 block; C(t) is
    evaluated there, via an Arnoldi reduction grown until the fitted width is
    stable (blocks small enough are handled exactly without reduction).
    """
    a_op = annihilator(me.space, mode)
    v_full = vectorize(a_op @ steady.rho)
    w_full = vectorize(np.asarray(a_op.getH().todense()).T)
    idx = sector_index(me.space, -1)
    v = idx.extract(v_full)
    w = idx.extract(w_full)
    leak = np.linalg.norm(np.delete(v_full, idx.vec_indices))
    if leak > 1e-10 * max(np.linalg.norm(v), 1e-300):
        raise SpectrumError(f"a rho_ss leaks out of the dN=-1 block ({leak:.2e})")
    c0 = w @ v  # = <a+ a>
    if abs(c0) < 1e-12:
        raise SpectrumError("mode is empty: correlation vanishes")
    L_blk, _ = assemble_sector(me, -1)

    # reduced model: C(t) = sum_j coeffs_j exp(lam_j t)
    beta = np.linalg.norm(v)
    m_max = min(krylov_max, L_blk.shape[0])
    V = np.zeros((L_blk.shape[0], m_max + 1), dtype=complex)
    H = np.zeros((m_max + 1, m_max), dtype=complex)
    V[:, 0] = v / beta

    def _model(m):
        lam, S = np.linalg.eig(H[:m, :m])
        e1 = np.zeros(m, dtype=complex)
        e1[0] = 1.0
        try:
            y = np.linalg.solve(S, e1)
        except np.linalg.LinAlgError:
            y = np.linalg.lstsq(S, e1, rcond=None)[0]
        g = (w @ V[:, :m]) @ S
        return lam, beta * g * y

    def _sample(lam, coeffs):
        # time step from the spectral content of the reduced model
        w_span = max(60.0, 2.5 * float(np.abs(lam.imag).max(initial=1.0)))
        dt = np.pi / w_span
        heavy = np.abs(coeffs) > 1e-8 * max(np.abs(coeffs).max(), 1e-300)
        slowest = max(-float(np.max(lam.real[heavy])), 1e-6)
        t_need = min(np.log(1.0 / decay_tol) * 1.4 / slowest,
                     max_windows * n_window * dt)
        n_t = int(min(max_windows * n_window, max(8 * n_window, t_need / dt)))
        t = np.arange(n_t) * dt
        C = np.empty(n_t, dtype=complex)
        for lo in range(0, n_t, 8192):
            C[lo:lo + 8192] = np.exp(np.outer(t[lo:lo + 8192], lam)) @ coeffs
        return t, C

    m_done = 0
    prev_fwhm = None
    result = None
    m = min(krylov_start, m_max)
    while True:
        m_eff = _arnoldi_extend(L_blk, V, H, m_done, m)
        m_done = m_eff
        lam, coeffs = _model(m_eff)
        t, C = _sample(lam, coeffs)
        try:
            result = spectrum_and_linewidth(C, t, decay_tol=decay_tol)
        except SpectrumError:
            result = None
        if result is not None and prev_fwhm is not None:
            if abs(result.fwhm - prev_fwhm) <= fwhm_rtol * result.fwhm:
                break
        if m_eff < m:  # invariant subspace reached: exact
            break
        if m >= m_max:
            break
        prev_fwhm = result.fwhm if result is not None else None
        m = min(m + 160, m_max)
    if result is None:
        raise SpectrumError("correlation did not decay within the time budget; "
                            "increase max_windows")
    result.meta.update({"krylov_size": m_done, "mode": mode,
                        "c0_exact": complex(c0)})
    return result
