"""Acceptance suite: one test per headline criterion, each printing a
PASS line with the measured numbers (failures raise with the same numbers).

Figure criteria read the shipped sweep presets.  Preset outputs are produced
once per session; set BICAVITY_ACCEPT_DIR to a directory to cache them
across runs (existing CSVs are reused).  Feature locations and orderings are
evaluated at the preset truncation cap (8); the handful of quantitative
amplitude checks at the sharp detuning-matched peak re-solve that single
point at a higher photon cutoff, since the peak keeps brightening past the
preset cap (values quoted in the source carry an unknown truncation).
"""

from __future__ import annotations

import csv
import math
import os

import numpy as np
import pytest

from bicavity.dynamics import emission_spectrum, steady_state
from bicavity.liouvillian import SystemParams, build_full_me, build_sme
from bicavity.observables import (
    flux_balance_check,
    photon_stats,
    rate_decomposition,
    rw_value,
)
from bicavity.operators import SpaceSpec, random_density_matrix, vectorize
from bicavity.phonons import BathParams, calibrate_alpha_p, mean_displacement
from bicavity.presets import PRESETS
from bicavity.sweeps import run_sweep

ALPHA = calibrate_alpha_p()


def _ok(name: str, detail: str):
    print(f"\nACCEPTANCE[{name}] PASS  {detail}")


def _load(path):
    with open(path) as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    header, data = rows[0], rows[1:]
    cols = {}
    for j, c in enumerate(header):
        if c == "error":
            cols[c] = [r[j] for r in data]
        else:
            cols[c] = np.array([float(r[j]) if r[j] else math.nan for r in data])
    return cols


@pytest.fixture(scope="session")
def accept_dir(tmp_path_factory):
    env = os.environ.get("BICAVITY_ACCEPT_DIR")
    if env:
        os.makedirs(env, exist_ok=True)
        return env
    return str(tmp_path_factory.mktemp("accept"))


def _preset_tables(name, accept_dir):
    cfg = PRESETS[name]()
    missing = [s.label for s in cfg.scenarios
               if not os.path.exists(os.path.join(
                   accept_dir, f"{name}__{_slug(s.label)}.csv"))]
    if missing:
        run_sweep(cfg, accept_dir, workers=int(os.environ.get("BICAVITY_WORKERS", "2")))
    out = {}
    for s in cfg.scenarios:
        out[s.label] = _load(os.path.join(accept_dir, f"{name}__{_slug(s.label)}.csv"))
    return out


def _slug(label):
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in label)


@pytest.fixture(scope="session")
def fig2(accept_dir):
    return _preset_tables("fig2", accept_dir)


@pytest.fixture(scope="session")
def fig3(accept_dir):
    return _preset_tables("fig3", accept_dir)


@pytest.fixture(scope="session")
def fig4a(accept_dir):
    return _preset_tables("fig4a", accept_dir)


@pytest.fixture(scope="session")
def fig4bc(accept_dir):
    return _preset_tables("fig4bc", accept_dir)


@pytest.fixture(scope="session")
def fig5(accept_dir):
    return _preset_tables("fig5", accept_dir)


@pytest.fixture(scope="session")
def fig6(accept_dir):
    return _preset_tables("fig6", accept_dir)


def _grid_step(x):
    return float(np.median(np.diff(x)))


# ---------------------------------------------------------------------------
# criterion 1: bath calibration


def test_phonon_calibration():
    got = {T: mean_displacement(BathParams(alpha_p=ALPHA, temperature=T))
           for T in (5.0, 10.0, 20.0)}
    for T, target in ((5.0, 0.90), (10.0, 0.84), (20.0, 0.72)):
        assert abs(got[T] - target) <= 0.02, (T, got[T])
    _ok("phonon-calibration",
        f"<B> = {got[5.0]:.3f}/{got[10.0]:.3f}/{got[20.0]:.3f} at 5/10/20 K "
        "(targets 0.90/0.84/0.72 +-0.02)")


# ---------------------------------------------------------------------------
# criterion 2: fig2 features


def test_fig2_population_transfer(fig2):
    t = fig2["T=5K"]
    x = t["value"]
    step = _grid_step(x)
    d_ee = x[np.nanargmin(t["pop_ee"])]
    d_eg = x[np.nanargmax(t["pop_eg"])]
    d_gg = x[np.nanargmax(t["pop_gg"])]
    for loc in (d_ee, d_eg, d_gg):
        assert abs(loc - 10.0) <= step + 1e-9, (d_ee, d_eg, d_gg)
    _ok("fig2a-population-transfer",
        f"pop_ee dip at {d_ee}, pop_eg/pop_gg peaks at {d_eg}/{d_gg} "
        f"(= delta1 within one step {step})")


def test_fig2_photon_numbers(fig2):
    t = fig2["T=5K"]
    x = t["value"]
    step = _grid_step(x)
    n1_peak = x[np.nanargmax(t["n1"])]
    assert abs(n1_peak - 10.0) <= step + 1e-9
    # broad mode-2 maximum near resonance (excluding the matched-detuning peak)
    sub = x <= 6.0
    n2_loc = x[sub][np.nanargmax(t["n2"][sub])]
    assert abs(n2_loc) <= 3.0 + 1e-9, n2_loc
    _ok("fig2b-photon-numbers",
        f"n1 sharp peak at {n1_peak}; n2 broad maximum at {n2_loc} (near 0)")


def test_fig2_intermode_coherence(fig2):
    t = fig2["T=5K"]
    x = t["value"]
    step = _grid_step(x)
    mag = np.hypot(t["re_cross"], t["im_cross"])
    loc = x[np.nanargmax(mag)]
    assert abs(loc - 10.0) <= step + 1e-9
    _ok("fig2c-intermode-coherence", f"|<a1+ a2>| peak at {loc}")


def test_fig2_correlation_colocation(fig2):
    t = fig2["T=5K"]
    x = t["value"]
    step = _grid_step(x)
    i_dip = np.nanargmin(t["g11"])
    i_pk = np.nanargmax(t["g12"])
    assert abs(x[i_dip] - x[i_pk]) <= step + 1e-9
    g11, g12 = t["g11"][i_dip], t["g12"][i_pk]
    assert abs(g12 - g11) <= 0.10 * g11
    _ok("fig2d-correlation-colocation",
        f"g11 dip at {x[i_dip]}, g12 peak at {x[i_pk]}, g12/g11 = {g12 / g11:.3f}")


# ---------------------------------------------------------------------------
# criterion 3: fig3 quantitative


@pytest.fixture(scope="session")
def fig3_peak_refined():
    """Matched-detuning peak at a photon cutoff past the preset cap."""
    out = {}
    for label, bathval in (("T=5K", BathParams(alpha_p=ALPHA, temperature=5.0)),
                           ("no_epi", None)):
        p = SystemParams(delta1=10.0, delta2=10.0, kappa1=0.5, kappa2=0.5,
                         bath=bathval)
        space = SpaceSpec(2, 12, 12)
        st = photon_stats(steady_state(build_full_me(p, space)).rho, space)
        space1 = SpaceSpec(1, 12, 12)
        st1 = photon_stats(steady_state(build_full_me(p, space1)).rho, space1)
        sme_space = SpaceSpec(2, 8, 8)
        sme = build_sme(p, sme_space)
        ss = steady_state(sme)
        rep = rate_decomposition(sme.channels, ss.rho, sme_space)
        out[label] = {"rw1": rw_value(st.n1, st1.n1), "n1m1": rep.N1M1}
    return out


def test_fig3_witness_peak_location_and_value(fig3, fig3_peak_refined):
    t = fig3["T=5K"]
    x = t["value"]
    step = _grid_step(x)
    loc = x[np.nanargmax(t["rw1"])]
    assert abs(loc - 10.0) <= step + 1e-9
    rw_5k = fig3_peak_refined["T=5K"]["rw1"]
    rw_free = fig3_peak_refined["no_epi"]["rw1"]
    assert abs(rw_5k - 2.1) <= 0.4, rw_5k
    assert abs(rw_free - 1.0) <= 0.3, rw_free
    _ok("fig3a-hyperradiance",
        f"RW1 peak at {loc}; refined peak RW = {rw_5k:.2f} (T=5K, target 2.1±0.4) "
        f"vs {rw_free:.2f} (no EPI, target 1.0±0.3)")


def test_fig3_single_photon_crossing(fig3):
    t = fig3["T=5K"]
    x = t["value"]
    step = _grid_step(x)
    diff = t["N1"] - t["M1"]
    sign_change = np.flatnonzero(np.diff(np.sign(diff[~np.isnan(diff)])) != 0)
    assert sign_change.size > 0, "N1 and M1 never cross"
    xc = x[~np.isnan(diff)][sign_change]
    nearest = xc[np.argmin(np.abs(xc - 10.0))]
    assert abs(nearest - 10.0) <= step + 1e-9, xc
    _ok("fig3b-single-photon-crossing", f"N1 = M1 at delta2 = {nearest}")


def test_fig3_two_photon_doubling(fig3_peak_refined):
    ratio = fig3_peak_refined["T=5K"]["n1m1"] / fig3_peak_refined["no_epi"]["n1m1"]
    assert abs(ratio - 2.0) <= 0.5, ratio
    _ok("fig3c-two-photon-doubling",
        f"N1M1(T=5K)/N1M1(no EPI) = {ratio:.2f} at the peak (target 2±0.5)")


# ---------------------------------------------------------------------------
# criterion 4: fig4a


def test_fig4a_crossing_and_ordering(fig4a):
    t5 = fig4a["T=5K"]
    x = t5["value"]
    rw5 = t5["rw1"]
    # first RW = 1 crossing scanning down from the lossy side
    crossing = None
    for i in range(len(x) - 1, 0, -1):
        if (rw5[i] - 1.0) * (rw5[i - 1] - 1.0) <= 0 and rw5[i - 1] >= 1.0:
            frac = (1.0 - rw5[i]) / (rw5[i - 1] - rw5[i])
            crossing = x[i] + frac * (x[i - 1] - x[i])
            break
    assert crossing is not None, "bimodal T=5K witness never crosses 1"
    assert abs(crossing - 0.7) <= 0.1 + 1e-9, crossing

    at8 = {lbl: fig4a[lbl]["rw1"][np.argmin(np.abs(fig4a[lbl]["value"] - 0.8))]
           for lbl in fig4a}
    assert at8["T=20K"] >= at8["T=5K"] - 1e-9
    assert at8["T=5K"] > at8["no_epi"]
    sm = fig4a["single-mode T=5K"]["rw1"]
    bi = fig4a["T=5K"]["rw1"]
    assert np.all(sm < bi + 1e-12), "single-mode witness not below bimodal"
    _ok("fig4a-kappa-crossing",
        f"RW=1 at kappa = {crossing:.3f} (target 0.7±0.1); at kappa=0.8: "
        f"T20={at8['T=20K']:.2f} >= T5={at8['T=5K']:.2f} > noEPI={at8['no_epi']:.2f}; "
        "single-mode below bimodal throughout")


# ---------------------------------------------------------------------------
# criterion 5: fig4bc trends


def test_fig4bc_temperature_trends(fig4bc):
    t = fig4bc["bimodal"]
    x = t["value"]
    upper = x >= (x[0] + x[-1]) / 2.0
    rw = t["rw1"]
    n1m1 = t["N1M1"]
    d_rw = np.diff(rw[upper])
    d_pair = np.diff(n1m1[upper])
    assert np.all(d_rw >= -1e-6), d_rw          # witness rises over the upper half
    assert np.all(d_pair >= -1e-6), d_pair      # pair emission keeps growing
    assert rw[-1] > rw[0] or np.nanmin(rw) < rw[0]  # net rise or an initial dip
    _ok("fig4bc-temperature-trends",
        f"upper-half dRW in [{d_rw.min():.2e}, {d_rw.max():.2e}], "
        f"dN1M1 in [{d_pair.min():.2e}, {d_pair.max():.2e}], "
        f"RW(5K)={rw[0]:.3f} -> RW(40K)={rw[-1]:.3f}")


# ---------------------------------------------------------------------------
# criterion 6: fig5


def test_fig5_witness_peak(fig5):
    rw = fig5["T=5K"]["rw1"]
    peak = np.nanmax(rw)
    assert abs(peak - 0.7) <= 0.15, peak
    _ok("fig5a-witness-peak", f"T=5K bimodal RW peak = {peak:.3f} (target 0.7±0.15)")


@pytest.fixture(scope="session")
def fig5_linewidth_refined(fig5):
    t = fig5["T=20K"]
    eta_peak = float(t["value"][np.nanargmax(t["rw1"])])
    p = SystemParams(delta1=10.0, delta2=10.0, kappa1=0.8, kappa2=0.8,
                     eta1=eta_peak, eta2=eta_peak,
                     bath=BathParams(alpha_p=ALPHA, temperature=20.0))
    space = SpaceSpec(2, 12, 12)
    me = build_full_me(p, space)
    ss = steady_state(me)
    spec = emission_spectrum(me, ss, 1)
    return {"eta": eta_peak, "fwhm": spec.fwhm}


def test_fig5_linewidth_at_witness_peak(fig5_linewidth_refined):
    fwhm = fig5_linewidth_refined["fwhm"]
    eta = fig5_linewidth_refined["eta"]
    assert abs(fwhm - 0.1) <= 0.05, (
        f"T=20K linewidth at the witness peak (eta={eta}) is {fwhm:.3f} g1; "
        "the 0.1±0.05 band is not reached (see decisions ledger: the "
        "steady-state photon number this model sustains at kappa=0.8 bounds "
        "the narrowing at ~0.3 g1, 62% below the bare cavity width)")
    _ok("fig5b-linewidth", f"T=20K linewidth at RW peak = {fwhm:.3f} g1")


def test_fig5_noepi_half_of_t20(fig5):
    peak_free = np.nanmax(fig5["no_epi"]["rw1"])
    peak_t20 = np.nanmax(fig5["T=20K"]["rw1"])
    ratio = peak_free / peak_t20
    assert abs(ratio - 0.5) <= 0.15, ratio
    _ok("fig5a-noepi-half", f"no-EPI peak / T=20K peak = {ratio:.3f} (target 0.5±0.15)")


# ---------------------------------------------------------------------------
# criterion 7: fig6 (resonant)


def test_fig6_resonant_witness(fig6):
    sm_peak = np.nanmax(fig6["single-mode T=5K"]["rw1"])
    assert abs(sm_peak - 0.8) <= 0.15, sm_peak

    t = fig6["g2=1.0 T=5K"]
    window = (t["value"] >= 10.0) & (t["value"] <= 25.0)
    assert np.nanmax(t["rw1"][window]) > 1.0, "no hyperradiance in 10 <= eta <= 25"

    # the two witnesses overlap along the sweep (sub-percent of the scale,
    # limited by the truncation cap at these bright resonant points)
    half = fig6["g2=0.5 T=5K"]
    finite = ~np.isnan(half["rw1"])
    sweep_gap = np.nanmax(np.abs(half["rw1"][finite] - half["rw2"][finite]))
    assert sweep_gap < 0.01 * max(1.0, np.nanmax(np.abs(half["rw1"])))

    # the underlying mode-rotation symmetry is exact: at a weakly pumped
    # point the truncation converges and rw1 = rw2 to 1e-6 and beyond
    p = SystemParams(delta1=0.0, delta2=0.0, g2=0.5, kappa1=0.8, kappa2=0.8,
                     eta1=0.2, eta2=0.2,
                     bath=BathParams(alpha_p=ALPHA, temperature=5.0))
    sp2, sp1 = SpaceSpec(2, 8, 8), SpaceSpec(1, 8, 8)
    st = photon_stats(steady_state(build_full_me(p, sp2)).rho, sp2)
    st1 = photon_stats(steady_state(build_full_me(p, sp1)).rho, sp1)
    exact_gap = abs(rw_value(st.n1, st1.n1) - rw_value(st.n2, st1.n2))
    assert exact_gap < 1e-6, exact_gap

    free_peak = np.nanmax(fig6["g2=1.0 no_epi"]["rw1"])
    t5_peak = np.nanmax(t["rw1"])
    assert free_peak > t5_peak, (free_peak, t5_peak)
    _ok("fig6-resonant-witness",
        f"single-mode peak {sm_peak:.3f} (0.8±0.15); bimodal T=5K max RW "
        f"{np.nanmax(t['rw1'][window]):.3f} > 1 in [10,25]; rw1=rw2 at g2=0.5 "
        f"(sweep gap {sweep_gap:.1e}, converged-point gap {exact_gap:.1e}); "
        f"no-EPI peak {free_peak:.3f} > T=5K peak {t5_peak:.3f}")


# ---------------------------------------------------------------------------
# criterion 8: property suite (no paper numbers)


def test_property_suite():
    bath = BathParams(alpha_p=ALPHA, temperature=5.0)
    p = SystemParams(delta1=10.0, delta2=10.0, bath=bath)
    space = SpaceSpec(2, 3, 3)
    me = build_full_me(p, space)
    L = me.total
    rng = np.random.default_rng(17)
    worst = 0.0
    for _ in range(20):
        rho = random_density_matrix(space.dim, rng)
        out = (L @ vectorize(rho))[np.arange(space.dim) * (space.dim + 1)]
        worst = max(worst, abs(out.sum()))
    assert worst < 1e-10, worst

    ss = steady_state(me)
    assert ss.residual < 1e-8
    assert ss.min_eig > -1e-8
    st = photon_stats(ss.rho, space)
    assert abs(st.pop_eg - st.pop_ge) < 1e-8

    sme_space = SpaceSpec(2, 5, 5)
    sme = build_sme(p, sme_space)
    ss_sme = steady_state(sme)
    rep = rate_decomposition(sme.channels, ss_sme.rho, sme_space)
    fb = flux_balance_check(rep, photon_stats(ss_sme.rho, sme_space), p)
    assert fb < 0.05, fb

    # rate integrals vs the adaptive quadrature oracle (see test_phonons for
    # the full seven-integral comparison at 1e-5)
    from oracles import one_sided_ft_oracle
    from bicavity.phonons import scattering_rates, tabulate_kernel

    kern = tabulate_kernel(bath)
    r = scattering_rates(kern, 10.0, 10.0, 1.0, 1.0)
    want = 2.0 * np.real(one_sided_ft_oracle("plus", 10.0, bath, float(kern.tau[-1])))
    assert abs(r.gamma_plus.real - want) < 1e-5 * abs(want)

    evals = np.linalg.eigvalsh(build_full_me(
        SystemParams(g2=0.0, delta1=0.0, delta2=0.0, bath=None),
        SpaceSpec(1, 1, 1)).h_s.toarray())
    assert min(abs(evals - 1.0)) < 1e-10 and min(abs(evals + 1.0)) < 1e-10

    p2 = SystemParams(g1=0.0, g2=0.0, eta1=2.0, gamma1=0.5, gamma_p1=0.0)
    st2 = photon_stats(steady_state(build_full_me(p2, SpaceSpec(1, 1, 1))).rho,
                       SpaceSpec(1, 1, 1))
    assert abs(st2.pop_ee - 0.8) < 1e-8
    _ok("property-suite",
        f"trace {worst:.1e}; residual {ss.residual:.1e}; min eig {ss.min_eig:.1e}; "
        f"pop symmetry ok; flux residual {fb:.1e}; rate oracle ok; "
        "Rabi doublet ok; pump balance ok")
