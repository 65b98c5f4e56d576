"""Assembly of the polaron master equation and its dispersive simplification.

Two builders are provided, both returning labeled channel lists whose
superoperators sum to the total generator:

* ``build_full_me`` -- the time-convolutionless second-order equation.  The
  phonon term is evaluated exactly in the eigenbasis of the system
  Hamiltonian: the dressed operator Lambda_j carries the one-sided kernel
  transform K_j(e_n - e_m) on every eigenbasis matrix element of X_j, keeping
  both dissipative (real) and principal-value (imaginary) parts.  No secular
  approximation is applied.

* ``build_sme`` -- the dispersive-regime equation with an effective
  Hamiltonian and phonon scattering dissipators, every term labeled with the
  net photon displacement of its gain action so that emission and absorption
  fluxes can be booked per process class.

Channels hold their superoperators as lists of elementary terms
(A rho, rho B, A rho B); the full sparse matrix is materialized lazily and
solvers can instead assemble excitation-sector blocks (see ``sectors``),
which is what makes photon truncations of 8 per mode tractable.

Sign conventions follow the loss-form master equation: every incoherent
process enters as D[C] = (rate/2)(2 C rho C+ - C+C rho - rho C+C) and the
phonon term enters with an overall minus on the double commutator.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .operators import (
    SpaceSpec,
    annihilator,
    creator,
    is_hermitian,
    number_op,
    qd_lowering,
    qd_raising,
    sandwich,
    spost,
    spre,
)
from .phonons import (
    BathParams,
    PhononKernel,
    mean_displacement,
    scattering_rates,
    tabulate_kernel,
)

# Dressed phonon operators are trimmed at this relative magnitude; entries
# this far below the leading one are orders of magnitude under every physics
# tolerance used downstream and only bloat the superoperator.
PHONON_TRIM_RTOL = 1e-9


@dataclass(frozen=True)
class SystemParams:
    """All rates and detunings in units of g1; temperature lives in `bath`.

    ``bath=None`` switches exciton-phonon effects off entirely (the "no EPI"
    scenario): the coupling renormalization is 1 and every phonon channel is
    dropped.
    """

    g1: float = 1.0
    g2: float = 1.0
    delta1: float = 0.0
    delta2: float = 0.0
    kappa1: float = 0.5
    kappa2: float = 0.5
    gamma1: float = 0.01
    gamma2: float = 0.01
    eta1: float = 25.0
    eta2: float = 25.0
    gamma_p1: float = 0.01
    gamma_p2: float = 0.01
    bath: BathParams | None = None

    def __post_init__(self):
        for name in ("kappa1", "kappa2", "gamma1", "gamma2", "eta1", "eta2",
                     "gamma_p1", "gamma_p2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def no_epi(self) -> bool:
        return self.bath is None or self.bath.alpha_p == 0

    @property
    def identical_qds(self) -> bool:
        return (self.gamma1 == self.gamma2 and self.eta1 == self.eta2
                and self.gamma_p1 == self.gamma_p2)

    def couplings(self) -> tuple[float, float]:
        return (self.g1, self.g2)

    def detunings(self) -> tuple[float, float]:
        return (self.delta1, self.delta2)

    @property
    def coupling_renormalization(self) -> float:
        return 1.0 if self.no_epi else mean_displacement(self.bath)


@dataclass(frozen=True)
class SuperTerm:
    """coeff * (A rho), coeff * (rho B), or coeff * (A rho B)."""

    coeff: complex
    kind: str                      # 'pre' | 'post' | 'sand'
    left: sp.csr_matrix | None     # A ('pre', 'sand')
    right: sp.csr_matrix | None    # B ('post', 'sand')

    def materialize(self) -> sp.csr_matrix:
        if self.kind == "pre":
            out = spre(self.left)
        elif self.kind == "post":
            out = spost(self.right)
        else:
            out = sandwich(self.left, self.right)
        return (self.coeff * out).tocsr()


def _commutator_terms(T: sp.spmatrix) -> list[SuperTerm]:
    """-i [T, rho]; trace-preserving for any T, Hermiticity needs the T+ twin."""
    T = T.tocsr()
    return [SuperTerm(-1j, "pre", T, None), SuperTerm(1j, "post", None, T)]


def _dissipator_terms(C: sp.spmatrix, rate: float) -> list[SuperTerm]:
    """(rate/2)(2 C rho C+ - C+C rho - rho C+C)."""
    if rate < 0:
        raise ValueError("dissipator rate must be >= 0")
    if rate == 0:
        return []
    C = C.tocsr()
    Cd = C.getH().tocsr()
    CdC = (Cd @ C).tocsr()
    return [
        SuperTerm(rate, "sand", C, Cd),
        SuperTerm(-rate / 2.0, "pre", CdC, None),
        SuperTerm(-rate / 2.0, "post", None, CdC),
    ]


def _sandwich_diss_terms(rate: complex, A: sp.spmatrix, B: sp.spmatrix) -> list[SuperTerm]:
    """-(rate/2)(BA rho - 2 A rho B + rho BA), the scattering dissipator form."""
    A = A.tocsr()
    B = B.tocsr()
    BA = (B @ A).tocsr()
    return [
        SuperTerm(rate, "sand", A, B),
        SuperTerm(-rate / 2.0, "pre", BA, None),
        SuperTerm(-rate / 2.0, "post", None, BA),
    ]


@dataclass(frozen=True)
class LiouvillianChannel:
    """One labeled term of the master equation.

    ``signature`` is the net (dn1, dn2) photon displacement of the channel's
    gain action on the photon-diagonal sector; entries of magnitude 2 mark
    same-mode two-photon terms of the dispersive equation.  ``None`` means the
    channel has no meaningful displacement label (full-ME phonon term).
    """

    label: str
    terms: tuple[SuperTerm, ...]
    signature: tuple[int, int] | None
    cls: str  # hamiltonian | cavity_loss | qd_decay | pump | dephasing | phonon | sme_effective

    @cached_property
    def superop(self) -> sp.csr_matrix:
        if not self.terms:
            raise ValueError(f"channel {self.label} has no terms")
        out = self.terms[0].materialize()
        for t in self.terms[1:]:
            out = out + t.materialize()
        return out.tocsr()


@dataclass
class MasterEquation:
    params: SystemParams
    space: SpaceSpec
    channels: list[LiouvillianChannel]
    h_s: sp.csr_matrix
    mean_displacement: float
    kind: str  # "full" or "sme"
    rates: dict = field(default_factory=dict)   # SME scattering rates per (k, l)
    diagnostics: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.space.dim

    @cached_property
    def total(self) -> sp.csr_matrix:
        out = self.channels[0].superop
        for ch in self.channels[1:]:
            out = out + ch.superop
        return out.tocsr()


def _collective_lowering(space: SpaceSpec) -> sp.csr_matrix:
    s = qd_lowering(space, 1)
    if space.n_emitters == 2:
        s = s + qd_lowering(space, 2)
    return s.tocsr()


def exchange_operator(p: SystemParams, space: SpaceSpec) -> sp.csr_matrix:
    """X_g = sum_k g_k (S+ a_k + a_k+ S-), both QDs coupled equally to mode k."""
    s_minus = _collective_lowering(space)
    s_plus = s_minus.getH()
    out = sp.csr_matrix((space.dim, space.dim), dtype=complex)
    for k, g in zip((1, 2), p.couplings()):
        if g == 0:
            continue
        a = annihilator(space, k)
        out = out + g * (s_plus @ a + a.getH() @ s_minus)
    return out.tocsr()


def quadrature_operator(p: SystemParams, space: SpaceSpec) -> sp.csr_matrix:
    """X_u = i sum_k g_k (S+ a_k - a_k+ S-), the conjugate quadrature of X_g."""
    s_minus = _collective_lowering(space)
    s_plus = s_minus.getH()
    out = sp.csr_matrix((space.dim, space.dim), dtype=complex)
    for k, g in zip((1, 2), p.couplings()):
        if g == 0:
            continue
        a = annihilator(space, k)
        out = out + 1j * g * (s_plus @ a - a.getH() @ s_minus)
    return out.tocsr()


def build_system_hamiltonian(p: SystemParams, space: SpaceSpec,
                             renorm: float | None = None) -> sp.csr_matrix:
    """H_s = -delta1 n1 - delta2 n2 + <B> X_g (hbar = 1, g1 units)."""
    if renorm is None:
        renorm = p.coupling_renormalization
    h = (-p.delta1) * number_op(space, 1) + (-p.delta2) * number_op(space, 2)
    h = h + renorm * exchange_operator(p, space)
    return h.tocsr()


def excitation_numbers(space: SpaceSpec) -> np.ndarray:
    """Total excitation (excitons + photons) of every basis state."""
    from .operators import build_space

    basis = build_space(space)
    return np.array([sum(s) for s in basis.states], dtype=int)


# one kernel tabulation per bath parameter set; read-only after construction
_KERNEL_CACHE: dict[BathParams, PhononKernel] = {}


def kernel_for(bath: BathParams) -> PhononKernel:
    kern = _KERNEL_CACHE.get(bath)
    if kern is None:
        kern = tabulate_kernel(bath)
        _KERNEL_CACHE[bath] = kern
    return kern


def _bare_channels(p: SystemParams, space: SpaceSpec) -> list[LiouvillianChannel]:
    ch = []
    for j, kappa in zip((1, 2), (p.kappa1, p.kappa2)):
        sig = (-1, 0) if j == 1 else (0, -1)
        terms = _dissipator_terms(annihilator(space, j), kappa)
        if terms:
            ch.append(LiouvillianChannel(f"cavity_loss_{j}", tuple(terms), sig,
                                         "cavity_loss"))
    gammas = (p.gamma1, p.gamma2)
    etas = (p.eta1, p.eta2)
    gps = (p.gamma_p1, p.gamma_p2)
    for i in range(1, space.n_emitters + 1):
        sm = qd_lowering(space, i)
        for label, op, rate, cls in (
            (f"qd_decay_{i}", sm, gammas[i - 1], "qd_decay"),
            (f"pump_{i}", sm.getH().tocsr(), etas[i - 1], "pump"),
            (f"dephasing_{i}", (sm.getH() @ sm).tocsr(), gps[i - 1], "dephasing"),
        ):
            terms = _dissipator_terms(op, rate)
            if terms:
                ch.append(LiouvillianChannel(label, tuple(terms), (0, 0), cls))
    return ch


def _trim(dense: np.ndarray, rtol: float) -> sp.csr_matrix:
    cutoff = rtol * max(np.abs(dense).max(), 1e-300)
    return sp.csr_matrix(np.where(np.abs(dense) >= cutoff, dense, 0.0))


def phonon_dressed_operators(p: SystemParams, space: SpaceSpec, kernel: PhononKernel,
                             trim_rtol: float = PHONON_TRIM_RTOL):
    """Lambda_j = int_0^inf dtau G_j(tau) e^{-iH_s tau} X_j e^{+iH_s tau}.

    H_s conserves the total excitation number, so the eigenproblem and the
    dressing are solved per excitation block; Lambda_j is exactly block
    diagonal in that quantum number.  Within a block the tau integral reduces
    to the entrywise weight K_j(e_n - e_m) on X_j's eigenbasis elements.
    """
    kernel.assert_decayed()
    B = kernel.mean_displacement
    h_s = build_system_hamiltonian(p, space, renorm=B)
    if not is_hermitian(h_s, rtol=1e-10):
        raise ValueError("system Hamiltonian must be Hermitian")
    x_ops = {"g": exchange_operator(p, space), "u": quadrature_operator(p, space)}

    n_exc = excitation_numbers(space)
    h_dense = h_s.toarray()
    tau = kernel.tau
    weighted = {"g": kernel.weights * kernel.g_g, "u": kernel.weights * kernel.g_u}
    lams = {"g": np.zeros_like(h_dense), "u": np.zeros_like(h_dense)}
    kmat_extrema = {name: {"re_max": 0.0, "im_max": 0.0} for name in ("g", "u")}
    for n in np.unique(n_exc):
        idx = np.flatnonzero(n_exc == n)
        eps, vecs = np.linalg.eigh(h_dense[np.ix_(idx, idx)])
        phase_left = np.exp(-1j * np.outer(eps, tau))
        phase_right = np.exp(1j * np.outer(tau, eps))
        for name in ("g", "u"):
            kmat = (phase_left * weighted[name]) @ phase_right  # K_j(e_n - e_m)
            x_blk = x_ops[name][np.ix_(idx, idx)].toarray()
            x_tilde = vecs.conj().T @ x_blk @ vecs
            lams[name][np.ix_(idx, idx)] = vecs @ (x_tilde * kmat) @ vecs.conj().T
            ext = kmat_extrema[name]
            ext["re_max"] = max(ext["re_max"], float(np.abs(kmat.real).max()))
            ext["im_max"] = max(ext["im_max"], float(np.abs(kmat.imag).max()))
    dressed = {name: _trim(lams[name], trim_rtol) for name in ("g", "u")}
    return h_s, x_ops, dressed, kmat_extrema


def build_full_me(p: SystemParams, space: SpaceSpec,
                  kernel: PhononKernel | None = None,
                  trim_rtol: float = PHONON_TRIM_RTOL) -> MasterEquation:
    """Full master equation: Hamiltonian, Lindblad set, and phonon term.

    The phonon double commutator is split into a Hermitian-conjugate pair of
    channels; each preserves the trace on its own, only the pair preserves
    Hermiticity.
    """
    diagnostics = {}
    if p.no_epi:
        B = 1.0
        h_s = build_system_hamiltonian(p, space, renorm=B)
        phonon_channels = []
    else:
        if kernel is None:
            kernel = kernel_for(p.bath)
        B = kernel.mean_displacement
        h_s, x_ops, dressed, kmat_extrema = phonon_dressed_operators(
            p, space, kernel, trim_rtol)
        diagnostics["phonon_kmat_extrema"] = kmat_extrema
        fwd_terms: list[SuperTerm] = []
        bwd_terms: list[SuperTerm] = []
        for name in ("g", "u"):
            X = x_ops[name]
            lam = dressed[name]
            lam_h = lam.getH().tocsr()
            # -([X, Lambda rho] + h.c.): forward part and its conjugate twin
            fwd_terms += [SuperTerm(-1.0, "pre", (X @ lam).tocsr(), None),
                          SuperTerm(1.0, "sand", lam, X)]
            bwd_terms += [SuperTerm(-1.0, "post", None, (lam_h @ X).tocsr()),
                          SuperTerm(1.0, "sand", X, lam_h)]
        phonon_channels = [
            LiouvillianChannel("phonon_tcl2", tuple(fwd_terms), None, "phonon"),
            LiouvillianChannel("phonon_tcl2_hc", tuple(bwd_terms), None, "phonon"),
        ]

    channels = [LiouvillianChannel("hamiltonian",
                                   tuple(_commutator_terms(h_s)), (0, 0), "hamiltonian")]
    if not is_hermitian(h_s):
        raise ValueError("assembled H_s is not Hermitian")
    channels += _bare_channels(p, space)
    channels += phonon_channels
    return MasterEquation(params=p, space=space, channels=channels, h_s=h_s,
                          mean_displacement=B, kind="full", diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# dispersive simplified equation

def _mode_delta(k: int) -> np.ndarray:
    return np.array([1, 0]) if k == 1 else np.array([0, 1])


def _sig(vec) -> tuple[int, int]:
    return (int(vec[0]), int(vec[1]))


def build_sme(p: SystemParams, space: SpaceSpec,
              kernel: PhononKernel | None = None) -> MasterEquation:
    """Dispersive-regime master equation with photon-labeled channels.

    Valid for detunings well outside the coupling, |delta_i| >> g_i; a soft
    warning is emitted below 3 g_i.  With alpha_p = 0 every scattering rate
    vanishes and only the bare Lindblad set plus H_s remains.
    """
    for k, (d, g) in enumerate(zip(p.detunings(), p.couplings()), start=1):
        if g > 0 and abs(d) < 3 * g:
            warnings.warn(
                f"dispersive equation used at |delta{k}|={abs(d):.2f} < 3*g{k}={3 * g:.2f}",
                stacklevel=2)
    if not p.no_epi and kernel is None:
        kernel = kernel_for(p.bath)
    B = 1.0 if p.no_epi else kernel.mean_displacement

    s_minus = _collective_lowering(space)
    s_plus = s_minus.getH().tocsr()
    a = {k: annihilator(space, k) for k in (1, 2)}
    ad = {k: creator(space, k) for k in (1, 2)}
    g = {1: p.g1, 2: p.g2}
    delta = {1: p.delta1, 2: p.delta2}

    channels: list[LiouvillianChannel] = []
    free = ((-p.delta1) * number_op(space, 1) + (-p.delta2) * number_op(space, 2)).tocsr()
    channels.append(LiouvillianChannel("detuning", tuple(_commutator_terms(free)),
                                       (0, 0), "hamiltonian"))
    for k in (1, 2):
        if g[k] == 0:
            continue
        gain_op = ((B * g[k]) * (ad[k] @ s_minus)).tocsr()
        channels.append(LiouvillianChannel(
            f"exchange_gain_{k}", tuple(_commutator_terms(gain_op)),
            _sig(_mode_delta(k)), "hamiltonian"))
        channels.append(LiouvillianChannel(
            f"exchange_loss_{k}", tuple(_commutator_terms(gain_op.getH().tocsr())),
            _sig(-_mode_delta(k)), "hamiltonian"))

    rates = {}
    if not p.no_epi:
        kernel.assert_decayed()
        two_qds = space.n_emitters == 2
        if two_qds:
            pair_down = (qd_lowering(space, 1) @ qd_lowering(space, 2)).tocsr()
            sm = {i: qd_lowering(space, i) for i in (1, 2)}
            sp_up = {i: qd_raising(space, i) for i in (1, 2)}
        for k in (1, 2):
            for l in (1, 2):
                if g[k] == 0 or g[l] == 0:
                    continue
                r = scattering_rates(kernel, delta[k], delta[l], g[k], g[l])
                rates[(k, l)] = r

                # effective-Hamiltonian pieces and their conjugates
                t_minus = ((-1j * r.omega_minus) * (ad[l] @ s_minus @ s_plus @ a[k])).tocsr()
                t_plus = ((-1j * r.omega_plus) * (s_plus @ a[l] @ ad[k] @ s_minus)).tocsr()
                heff = [("omega_minus", t_minus, _mode_delta(l) - _mode_delta(k)),
                        ("omega_plus", t_plus, _mode_delta(k) - _mode_delta(l))]
                if two_qds:
                    t_mm = ((2j * r.omega_mm) * (ad[l] @ ad[k] @ pair_down)).tocsr()
                    heff.append(("omega_mm", t_mm, _mode_delta(k) + _mode_delta(l)))
                for name, t_op, dsig in heff:
                    channels.append(LiouvillianChannel(
                        f"{name}_{k}{l}", tuple(_commutator_terms(t_op)),
                        _sig(dsig), "sme_effective"))
                    channels.append(LiouvillianChannel(
                        f"{name}_{k}{l}_hc", tuple(_commutator_terms(t_op.getH().tocsr())),
                        _sig(-dsig), "sme_effective"))

                channels.append(LiouvillianChannel(
                    f"gamma_minus_{k}{l}",
                    tuple(_sandwich_diss_terms(r.gamma_minus, s_plus @ a[k], ad[l] @ s_minus)),
                    _sig(-_mode_delta(k)), "phonon"))
                channels.append(LiouvillianChannel(
                    f"gamma_plus_{k}{l}",
                    tuple(_sandwich_diss_terms(r.gamma_plus, ad[k] @ s_minus, s_plus @ a[l])),
                    _sig(_mode_delta(k)), "phonon"))
                if two_qds:
                    mm_terms: list[SuperTerm] = []
                    pp_terms: list[SuperTerm] = []
                    for i, j in ((1, 2), (2, 1)):
                        mm_terms += _sandwich_diss_terms(
                            r.gamma_mm, ad[k] @ sm[i], ad[l] @ sm[j])
                        pp_terms += _sandwich_diss_terms(
                            r.gamma_pp, sp_up[i] @ a[k], sp_up[j] @ a[l])
                    dsig = _mode_delta(k) + _mode_delta(l)
                    channels.append(LiouvillianChannel(
                        f"gamma_mm_{k}{l}", tuple(mm_terms), _sig(dsig), "phonon"))
                    channels.append(LiouvillianChannel(
                        f"gamma_pp_{k}{l}", tuple(pp_terms), _sig(-dsig), "phonon"))

    channels += _bare_channels(p, space)
    h_s = build_system_hamiltonian(p, space, renorm=B)
    return MasterEquation(params=p, space=space, channels=channels, h_s=h_s,
                          mean_displacement=B, kind="sme", rates=rates)


def permute_qd_labels(space: SpaceSpec) -> sp.csr_matrix:
    """Basis permutation swapping QD1 and QD2 (and nothing else)."""
    if space.n_emitters != 2:
        raise ValueError("QD swap needs two emitters")
    nph = (space.n_max_1 + 1) * (space.n_max_2 + 1)
    perm = np.empty(space.dim, dtype=int)
    for q1 in (0, 1):
        for q2 in (0, 1):
            src = (q1 * 2 + q2) * nph
            dst = (q2 * 2 + q1) * nph
            perm[src:src + nph] = np.arange(dst, dst + nph)
    data = np.ones(space.dim)
    return sp.csr_matrix((data, (np.arange(space.dim), perm)),
                         shape=(space.dim, space.dim)).astype(complex)
