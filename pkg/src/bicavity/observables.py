"""Photon statistics, collective populations, radiance witness, and the
emission/absorption rate decomposition of the cavity-field rate equation.

The rate decomposition follows the lasing rate-equation construction: write
the generator on the dN = 0 block, split it into the QD-and-photon diagonal
sector P (elements <i,n,m|rho|i,n,m>) and the coherence sector, and
eliminate the coherences, which at steady state are slaved exactly to the
diagonal, C = -M_CC^{-1} M_CP p.  Every channel then contributes an
effective diagonal-sector rate matrix

    R_c = M_PP^(c) + M_PC^(c) X,       X = -M_CC^{-1} M_CP  (total equation),

whose entries are fluxes between photon shells (n, m) -> (n', m').  Summing
entries by the shell displacement gives the single-photon, two-mode
two-photon (one photon into each mode), and same-mode two-photon emission
and absorption totals; cavity decay channels are booked separately.  Because
the slaving is exact at steady state, the displacement-resolved fluxes add up
to d<n_i>/dt = 0 identically, which is what the flux-balance diagnostic
probes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .dynamics import SteadyState, steady_state
from .liouvillian import LiouvillianChannel, MasterEquation, SystemParams, build_full_me
from .operators import SpaceSpec, annihilator, build_space, qd_projector
from .sectors import restrict_channel, sector_index

UNDEFINED_FLOOR = 1e-12


@dataclass(frozen=True)
class PhotonStats:
    n1: float
    n2: float
    g11: float | None
    g22: float | None
    g12: float | None
    cross: complex              # <a1+ a2>
    pop_ee: float
    pop_eg: float | None
    pop_ge: float | None
    pop_gg: float


def _expect(op: sp.spmatrix, rho: np.ndarray) -> complex:
    return complex((op @ rho).diagonal().sum())


def photon_stats(rho: np.ndarray, space: SpaceSpec) -> PhotonStats:
    """Mean photon numbers, zero-delay correlations, and QD populations.

    Correlations with a mean photon number below 1e-12 are reported as None
    (undefined) rather than as a diverging ratio.
    """
    a1 = annihilator(space, 1)
    a2 = annihilator(space, 2)
    n1 = _expect((a1.getH() @ a1).tocsr(), rho).real
    n2 = _expect((a2.getH() @ a2).tocsr(), rho).real
    g11 = g22 = g12 = None
    if n1 > UNDEFINED_FLOOR:
        g11 = _expect((a1.getH() @ a1.getH() @ a1 @ a1).tocsr(), rho).real / n1**2
    if n2 > UNDEFINED_FLOOR:
        g22 = _expect((a2.getH() @ a2.getH() @ a2 @ a2).tocsr(), rho).real / n2**2
    if n1 > UNDEFINED_FLOOR and n2 > UNDEFINED_FLOOR:
        g12 = _expect((a1.getH() @ a2.getH() @ a2 @ a1).tocsr(), rho).real / (n1 * n2)
    cross = _expect((a1.getH() @ a2).tocsr(), rho)
    if space.n_emitters == 2:
        pe1, pg1 = qd_projector(space, 1, "e"), qd_projector(space, 1, "g")
        pe2, pg2 = qd_projector(space, 2, "e"), qd_projector(space, 2, "g")
        pop_ee = _expect((pe1 @ pe2).tocsr(), rho).real
        pop_eg = _expect((pe1 @ pg2).tocsr(), rho).real
        pop_ge = _expect((pg1 @ pe2).tocsr(), rho).real
        pop_gg = _expect((pg1 @ pg2).tocsr(), rho).real
    else:
        pop_ee = _expect(qd_projector(space, 1, "e"), rho).real
        pop_gg = _expect(qd_projector(space, 1, "g"), rho).real
        pop_eg = pop_ge = None
    return PhotonStats(n1=n1, n2=n2, g11=g11, g22=g22, g12=g12, cross=cross,
                       pop_ee=pop_ee, pop_eg=pop_eg, pop_ge=pop_ge, pop_gg=pop_gg)


def rw_value(n_two_emitters: float, n_single_emitter: float) -> float | None:
    """(n_2QD - 2 n_1QD) / (2 n_1QD); None when the reference mode is empty."""
    if n_single_emitter < UNDEFINED_FLOOR:
        return None
    return (n_two_emitters - 2.0 * n_single_emitter) / (2.0 * n_single_emitter)


@dataclass(frozen=True)
class RadianceWitness:
    rw1: float | None
    rw2: float | None
    stats: PhotonStats         # two-emitter system
    reference: PhotonStats     # single-emitter system, same rates and couplings


def radiance_witness(p: SystemParams, space: SpaceSpec,
                     builder=build_full_me) -> RadianceWitness:
    """Solve the two-emitter system and its single-emitter reference.

    The reference keeps the per-QD pump, decay, dephasing, couplings, and
    cavity parameters; only the emitter count changes.
    """
    if space.n_emitters != 2:
        raise ValueError("radiance witness is defined against a 2-emitter system")
    ss2 = steady_state(builder(p, space))
    stats2 = photon_stats(ss2.rho, space)
    space1 = replace(space, n_emitters=1)
    ss1 = steady_state(builder(p, space1))
    stats1 = photon_stats(ss1.rho, space1)
    return RadianceWitness(rw1=rw_value(stats2.n1, stats1.n1),
                           rw2=rw_value(stats2.n2, stats1.n2),
                           stats=stats2, reference=stats1)


# ---------------------------------------------------------------------------
# rate decomposition

@dataclass
class RateReport:
    """Excess-emission-rate decomposition of the dispersive equation.

    Steady-state shell fluxes are attributed photon by photon: a flux entry
    with displacement (d1, d2) carries min(d1, d2) correlated pair events
    when both displacements share a sign, and |d_i| - pairs single-photon
    events per mode.  This attribution conserves the photon budget exactly,
    so kappa_i <n_i> = single_i + N1M1 holds to solver precision.

    N1/M1: single-photon EER into modes 1/2 (emission minus absorption).
    N1M1: two-mode two-photon EER (one photon into each mode per event).
    N2/M2: net EER of the pure same-mode two-photon displacement class,
           reported for diagnostics (their photon budget sits inside N1/M1).
    emission/absorption: gross directed totals keyed by displacement class.
    cavity_flux: photon loss rate through each cavity decay channel.
    transfer: net coherent photon transfer from mode 2 into mode 1.
    alpha_total: aggregate loss coefficient of the diagonal sector.
    """

    N1: float
    M1: float
    N1M1: float
    N2: float
    M2: float
    emission: dict
    absorption: dict
    cavity_flux: tuple[float, float]
    transfer: float
    alpha_total: float
    per_class: dict
    imag_residual: float
    shells: dict | None = None


_EER_KEYS = {(1, 0): "N1", (0, 1): "M1", (1, 1): "N1M1", (2, 0): "N2", (0, 2): "M2"}


def rate_decomposition(channels: list[LiouvillianChannel], rho_ss: np.ndarray,
                       space: SpaceSpec, *, export_shells: bool = False) -> RateReport:
    """Displacement-resolved steady-state fluxes of a labeled channel list.

    Requires every channel to carry a photon signature (the dispersive
    builder guarantees this); the full-equation phonon channel does not and
    is rejected, matching the builder contract.
    """
    for ch in channels:
        if ch.signature is None:
            raise ValueError(f"channel '{ch.label}' carries no photon signature")

    dim = space.dim
    idx = sector_index(space, 0)
    diag_pos = idx.diagonal_positions()
    n_diag = diag_pos.size
    is_diag = np.zeros(idx.size, dtype=bool)
    is_diag[diag_pos] = True
    coh_pos = np.flatnonzero(~is_diag)

    blocks = {ch.label: restrict_channel(ch, idx) for ch in channels}
    L_blk = None
    for b in blocks.values():
        L_blk = b if L_blk is None else L_blk + b
    L_blk = L_blk.tocsr()

    M_cc = L_blk[coh_pos][:, coh_pos].tocsr()
    M_cp = L_blk[coh_pos][:, diag_pos].tocsr()
    M_pc = L_blk[diag_pos][:, coh_pos].tocsr()

    # coherences actually mediating diagonal-to-diagonal flux; solving only on
    # the coupled components keeps degenerate test systems non-singular
    seeds = np.union1d(M_cp.tocoo().row, M_pc.tocoo().col)
    if seeds.size:
        graph = (M_cc != 0)
        graph = graph + graph.T
        n_comp, labels = connected_components(graph, directed=False)
        keep_labels = np.unique(labels[seeds])
        kept = np.flatnonzero(np.isin(labels, keep_labels))
        lu = spla.splu(M_cc[kept][:, kept].tocsc())
        X = lu.solve(-M_cp[kept].toarray())            # kept x n_diag
    else:
        kept = np.empty(0, dtype=int)
        X = np.zeros((0, n_diag), dtype=complex)

    # populations of the diagonal sector (QD-state resolved)
    p_diag = np.real(rho_ss.reshape(-1, order="F")[idx.vec_indices[diag_pos]])

    basis = build_space(space)
    ph1 = np.array([s[-2] for s in basis.states])
    ph2 = np.array([s[-1] for s in basis.states])
    dvec = idx.vec_indices[diag_pos]
    drow = dvec % dim
    dn1 = ph1[drow][:, None] - ph1[drow][None, :]   # [target, source]
    dn2 = ph2[drow][:, None] - ph2[drow][None, :]

    emission = {k: 0.0 + 0.0j for k in _EER_KEYS.values()}
    absorption = {k: 0.0 + 0.0j for k in _EER_KEYS.values()}
    cavity = [0.0, 0.0]
    transfer = 0.0 + 0.0j
    alpha_total = 0.0 + 0.0j
    totals = {"N1": 0.0 + 0.0j, "M1": 0.0 + 0.0j, "N1M1": 0.0 + 0.0j}
    per_class: dict = {}

    # photon-by-photon attribution weights of each displacement entry
    pairs_w = (np.where((dn1 > 0) & (dn2 > 0), np.minimum(dn1, dn2), 0)
               - np.where((dn1 < 0) & (dn2 < 0), np.minimum(-dn1, -dn2), 0))
    single1_w = dn1 - pairs_w
    single2_w = dn2 - pairs_w

    off_diag = ~np.eye(n_diag, dtype=bool)
    for ch in channels:
        blk = blocks[ch.label]
        R = blk[diag_pos][:, diag_pos].toarray()
        if kept.size:
            R = R + blk[diag_pos][:, coh_pos[kept]] @ X
        F = R * p_diag[None, :]                     # flux source -> target
        cls_entry = per_class.setdefault(ch.cls, {})
        if ch.cls == "cavity_loss":
            mode = 0 if ch.label.endswith("1") else 1
            cavity[mode] += float(np.real(F[(dn1 == -1 if mode == 0 else dn2 == -1)
                                            & off_diag].sum()))
            continue
        alpha_total += -np.sum(np.diag(F))
        totals["N1"] += (F * single1_w)[off_diag].sum()
        totals["M1"] += (F * single2_w)[off_diag].sum()
        totals["N1M1"] += (F * pairs_w)[off_diag].sum()
        for (d1, d2), key in _EER_KEYS.items():
            emission[key] += F[(dn1 == d1) & (dn2 == d2) & off_diag].sum()
            absorption[key] += F[(dn1 == -d1) & (dn2 == -d2) & off_diag].sum()
        transfer += F[(dn1 == 1) & (dn2 == -1) & off_diag].sum()
        transfer -= F[(dn1 == -1) & (dn2 == 1) & off_diag].sum()
        cls_entry[ch.label] = {
            "signature": ch.signature,
            "flux_n1": float(np.real((F * dn1)[off_diag].sum())),
            "flux_n2": float(np.real((F * dn2)[off_diag].sum())),
        }

    imag_parts = [abs(v.imag) for v in totals.values()]
    imag_parts += [abs(v.imag) for v in absorption.values()]
    imag_parts += [abs(transfer.imag), abs(alpha_total.imag)]
    scale = max(max(abs(v) for v in totals.values()), 1e-30)
    imag_residual = max(imag_parts) / scale

    shells = None
    if export_shells:
        shells = {"P": {}, "flux": {}}
        nm = list(zip(ph1[drow], ph2[drow]))
        for d, (n, m) in enumerate(nm):
            shells["P"][(int(n), int(m))] = shells["P"].get((int(n), int(m)), 0.0) \
                + float(p_diag[d])
        # total displacement-resolved shell flux, cavity excluded
        F_tot = None
        for ch in channels:
            if ch.cls == "cavity_loss":
                continue
            blk = blocks[ch.label]
            R = blk[diag_pos][:, diag_pos].toarray()
            if kept.size:
                R = R + blk[diag_pos][:, coh_pos[kept]] @ X
            F = R * p_diag[None, :]
            F_tot = F if F_tot is None else F_tot + F
        for (d1, d2), key in _EER_KEYS.items():
            for sgn, name in ((1, key), (-1, key + "_abs")):
                mask = (dn1 == sgn * d1) & (dn2 == sgn * d2) & off_diag
                per_shell: dict = {}
                tgt, src = np.nonzero(mask)
                for t, s in zip(tgt, src):
                    nm_s = (int(ph1[drow][s]), int(ph2[drow][s]))
                    per_shell[nm_s] = per_shell.get(nm_s, 0.0) + float(np.real(F_tot[t, s]))
                shells["flux"][name] = per_shell

    eer = {key: float(np.real(emission[key] - absorption[key]))
           for key in _EER_KEYS.values()}
    return RateReport(
        N1=float(np.real(totals["N1"])), M1=float(np.real(totals["M1"])),
        N1M1=float(np.real(totals["N1M1"])), N2=eer["N2"], M2=eer["M2"],
        emission={k: float(np.real(v)) for k, v in emission.items()},
        absorption={k: float(np.real(v)) for k, v in absorption.items()},
        cavity_flux=(float(cavity[0]), float(cavity[1])),
        transfer=float(np.real(transfer)),
        alpha_total=float(np.real(alpha_total)),
        per_class=per_class,
        imag_residual=float(imag_residual),
        shells=shells,
    )


def flux_balance_check(report: RateReport, stats: PhotonStats,
                       p: SystemParams) -> float:
    """Residual of kappa_i <n_i> = (single-photon EER_i) + N1M1, per mode.

    Two-mode two-photon events feed one photon into each mode.  With the
    photon-by-photon attribution the identity holds up to steady-state solver
    error and coherence-elimination roundoff, so the returned maximum
    relative residual is an internal consistency probe; purely diagnostic.
    """
    residuals = []
    for n, kappa, single in ((stats.n1, p.kappa1, report.N1),
                             (stats.n2, p.kappa2, report.M1)):
        out = kappa * n
        if out < 1e-14:
            residuals.append(0.0)
            continue
        residuals.append(abs(out - (single + report.N1M1)) / out)
    return float(max(residuals))
