import numpy as np
import pytest
import scipy.sparse as sp

from bicavity.liouvillian import (
    LiouvillianChannel,
    SystemParams,
    build_full_me,
    build_sme,
    build_system_hamiltonian,
    exchange_operator,
    excitation_numbers,
    kernel_for,
    permute_qd_labels,
    quadrature_operator,
)
from bicavity.operators import (
    SpaceSpec,
    annihilator,
    creator,
    qd_lowering,
    qd_raising,
    random_density_matrix,
    unvectorize,
    vectorize,
)
from bicavity.phonons import BathParams, calibrate_alpha_p

ALPHA = calibrate_alpha_p()
BATH5 = BathParams(alpha_p=ALPHA, temperature=5.0)


def params_5k(**kw):
    kw.setdefault("bath", BATH5)
    kw.setdefault("delta1", 10.0)
    kw.setdefault("delta2", 10.0)
    return SystemParams(**kw)


def test_rate_validation():
    with pytest.raises(ValueError):
        SystemParams(kappa1=-0.1)


def test_hamiltonian_spectator_mode_with_g2_zero():
    space = SpaceSpec(2, 1, 2)
    p = SystemParams(g2=0.0, delta1=0.0, delta2=3.0, bath=None)
    h = build_system_hamiltonian(p, space)
    # mode 2 enters only through its free detuning term
    n2 = (creator(space, 2) @ annihilator(space, 2)).tocsr()
    resid = (h - (-3.0) * n2) @ n2 - n2 @ (h - (-3.0) * n2)
    assert abs(resid).max() < 1e-14


def test_hamiltonian_renormalization_scales_coupling():
    space = SpaceSpec(2, 1, 1)
    p_off = SystemParams(bath=None, delta1=10.0, delta2=10.0)
    h_bare = build_system_hamiltonian(p_off, space)
    h_scaled = build_system_hamiltonian(p_off, space, renorm=0.9)
    diff = (h_scaled - h_bare).tocoo()
    x = exchange_operator(p_off, space).tocoo()
    # off-diagonal coupling entries shrink by exactly 0.9
    assert np.allclose((h_scaled - h_bare).toarray(), -0.1 * x.toarray())


def test_vacuum_rabi_doublet():
    space = SpaceSpec(1, 1, 1)
    p = SystemParams(g2=0.0, delta1=0.0, delta2=0.0, bath=None)
    evals = np.linalg.eigvalsh(build_system_hamiltonian(p, space).toarray())
    assert min(abs(evals - 1.0)) < 1e-10
    assert min(abs(evals + 1.0)) < 1e-10


def test_quadrature_operator_is_hermitian():
    space = SpaceSpec(2, 2, 2)
    p = params_5k()
    for op in (exchange_operator(p, space), quadrature_operator(p, space)):
        assert abs((op - op.getH())).max() < 1e-14


def trace_of_action(L, rho, dim):
    return np.trace(unvectorize(L @ vectorize(rho), dim))


def test_full_me_trace_preservation_and_hermiticity():
    space = SpaceSpec(2, 2, 2)
    me = build_full_me(params_5k(), space)
    L = me.total
    rng = np.random.default_rng(1)
    for _ in range(20):
        rho = random_density_matrix(space.dim, rng)
        out = unvectorize(L @ vectorize(rho), space.dim)
        assert abs(np.trace(out)) < 1e-10
        assert np.abs(out - out.conj().T).max() < 1e-12


def test_channel_sum_equals_total():
    space = SpaceSpec(2, 2, 2)
    me = build_full_me(params_5k(), space)
    total = me.channels[0].superop.copy()
    for ch in me.channels[1:]:
        total = total + ch.superop
    diff = (total - me.total).tocoo()
    assert diff.nnz == 0 or np.abs(diff.data).max() < 1e-14


def test_phonon_channels_are_hermitian_pair():
    space = SpaceSpec(2, 2, 2)
    me = build_full_me(params_5k(), space)
    phonon = [c for c in me.channels if c.cls == "phonon"]
    assert len(phonon) == 2
    rng = np.random.default_rng(2)
    rho = random_density_matrix(space.dim, rng)
    outs = [unvectorize(c.superop @ vectorize(rho), space.dim) for c in phonon]
    for out in outs:
        assert abs(np.trace(out)) < 1e-11          # trace-free individually
    both = outs[0] + outs[1]
    assert np.abs(both - both.conj().T).max() < 1e-12  # Hermiticity only jointly


def textbook_liouvillian(p: SystemParams, space: SpaceSpec) -> np.ndarray:
    """Independent dense assembly of the no-EPI master equation."""
    d = space.dim
    ident = np.eye(d)
    a1 = annihilator(space, 1).toarray()
    a2 = annihilator(space, 2).toarray()
    sm = [qd_lowering(space, i).toarray() for i in (1, 2)[: space.n_emitters]]
    H = -p.delta1 * a1.conj().T @ a1 - p.delta2 * a2.conj().T @ a2
    for s in sm:
        H = H + p.g1 * (s.conj().T @ a1 + a1.conj().T @ s)
        H = H + p.g2 * (s.conj().T @ a2 + a2.conj().T @ s)

    def pre(A):
        return np.kron(ident, A)

    def post(B):
        return np.kron(B.T, ident)

    def diss(C, rate):
        Cd = C.conj().T
        return rate * (np.kron(Cd.T, C)
                       - 0.5 * pre(Cd @ C) - 0.5 * post(Cd @ C))

    L = -1j * (pre(H) - post(H))
    L += diss(a1, p.kappa1) + diss(a2, p.kappa2)
    rates = ((p.gamma1, p.eta1, p.gamma_p1), (p.gamma2, p.eta2, p.gamma_p2))
    for s, (gam, eta, gp) in zip(sm, rates):
        L += diss(s, gam) + diss(s.conj().T, eta) + diss(s.conj().T @ s, gp)
    return L


def test_no_epi_matches_textbook_assembly():
    space = SpaceSpec(2, 2, 1)
    p = SystemParams(bath=None, delta1=4.0, delta2=-2.0, g2=0.7,
                     kappa1=0.4, kappa2=0.6, gamma1=0.02, gamma2=0.02,
                     eta1=3.0, eta2=3.0, gamma_p1=0.05, gamma_p2=0.05)
    me = build_full_me(p, space)
    L_ref = textbook_liouvillian(p, space)
    assert np.abs(me.total.toarray() - L_ref).max() < 1e-13


def test_permutation_symmetry_identical_qds():
    space = SpaceSpec(2, 2, 2)
    me = build_full_me(params_5k(), space)
    P = permute_qd_labels(space)
    S = sp.kron(P, P, format="csr")  # vec permutation for rho -> P rho P^T
    L = me.total
    diff = S @ L @ S.getH() - L
    assert np.abs(diff.toarray()).max() < 1e-11


def test_excitation_conservation_no_sector_leakage():
    from bicavity.sectors import sector_leakage

    space = SpaceSpec(2, 2, 2)
    for builder in (build_full_me, build_sme):
        me = builder(params_5k(), space)
        for s in (-1, 0, 1):
            assert sector_leakage(me, s) == 0.0


def test_sme_reduces_to_bare_lindblad_without_phonons():
    space = SpaceSpec(2, 2, 2)
    p_no = SystemParams(bath=None, delta1=10.0, delta2=10.0)
    sme = build_sme(p_no, space)
    full = build_full_me(p_no, space)
    assert np.abs((sme.total - full.total).toarray()).max() < 1e-13
    p_zero = SystemParams(bath=BathParams(alpha_p=0.0, temperature=5.0),
                          delta1=10.0, delta2=10.0)
    sme0 = build_sme(p_zero, space)
    assert np.abs((sme0.total - full.total).toarray()).max() < 1e-13


def test_sme_warns_inside_dispersive_bound():
    space = SpaceSpec(2, 1, 1)
    with pytest.warns(UserWarning, match="dispersive"):
        build_sme(SystemParams(bath=BATH5, delta1=1.0, delta2=10.0), space)


def test_sme_channel_signatures_present_and_conjugate_flipped():
    space = SpaceSpec(2, 2, 2)
    sme = build_sme(params_5k(), space)
    by_label = {c.label: c for c in sme.channels}
    assert all(c.signature is not None for c in sme.channels)
    for label, ch in by_label.items():
        if label.endswith("_hc"):
            twin = by_label[label[:-3]]
            assert ch.signature == (-twin.signature[0], -twin.signature[1])
    assert by_label["exchange_gain_1"].signature == (1, 0)
    assert by_label["exchange_loss_2"].signature == (0, -1)
    assert by_label["gamma_mm_12"].signature == (1, 1)
    assert by_label["gamma_mm_11"].signature == (2, 0)
    assert by_label["gamma_pp_22"].signature == (0, -2)
    assert by_label["omega_minus_12"].signature == (-1, 1)


def test_sme_trace_preservation_channelwise():
    space = SpaceSpec(2, 2, 2)
    sme = build_sme(params_5k(), space)
    rng = np.random.default_rng(4)
    rho = random_density_matrix(space.dim, rng)
    for ch in sme.channels:
        out = unvectorize(ch.superop @ vectorize(rho), space.dim)
        assert abs(np.trace(out)) < 1e-11, ch.label
    out = unvectorize(sme.total @ vectorize(rho), space.dim)
    assert np.abs(out - out.conj().T).max() < 1e-11


def test_sme_matches_full_me_mean_photon_number():
    from bicavity.dynamics import steady_state
    from bicavity.observables import photon_stats

    space = SpaceSpec(2, 5, 5)
    p = params_5k()
    n_full = photon_stats(steady_state(build_full_me(p, space)).rho, space).n1
    n_sme = photon_stats(steady_state(build_sme(p, space)).rho, space).n1
    assert n_sme == pytest.approx(n_full, rel=0.25)


def test_phonon_feeding_asymmetry_in_detuning_sign():
    """Zero-temperature phonons assist emission into a red cavity only."""
    from bicavity.dynamics import steady_state
    from bicavity.observables import photon_stats

    space = SpaceSpec(2, 3, 3)
    bath0 = BathParams(alpha_p=ALPHA, temperature=0.0)
    n_red = photon_stats(steady_state(build_full_me(
        SystemParams(delta1=10.0, delta2=10.0, bath=bath0), space)).rho, space).n1
    n_blue = photon_stats(steady_state(build_full_me(
        SystemParams(delta1=-10.0, delta2=-10.0, bath=bath0), space)).rho, space).n1
    n_free = photon_stats(steady_state(build_full_me(
        SystemParams(delta1=10.0, delta2=10.0, bath=None), space)).rho, space).n1
    assert n_red > n_free > n_blue


def test_phonon_shift_diagnostics_exposed():
    space = SpaceSpec(2, 1, 1)
    me = build_full_me(params_5k(), space)
    ext = me.diagnostics["phonon_kmat_extrema"]
    assert ext["g"]["im_max"] > 0 and ext["u"]["re_max"] > 0


def test_excitation_numbers():
    space = SpaceSpec(2, 1, 1)
    n = excitation_numbers(space)
    assert n.min() == 0 and n.max() == 4 and n.size == space.dim
