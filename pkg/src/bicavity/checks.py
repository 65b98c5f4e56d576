"""Quick self-contained invariant checks behind `bicavity check`.

A thin subset of the test suite that runs in seconds: operator algebra,
trace preservation of assembled generators, bath calibration anchors,
vacuum-Rabi splitting, pump balance, and the witness formula.
"""

from __future__ import annotations

import numpy as np

from .dynamics import steady_state
from .liouvillian import SystemParams, build_full_me
from .observables import photon_stats, rw_value
from .operators import (
    SpaceSpec,
    annihilator,
    build_space,
    random_density_matrix,
    vectorize,
)
from .phonons import BathParams, calibrate_alpha_p, mean_displacement, tabulate_kernel


def run_checks(verbose: bool = True) -> bool:
    results = []

    def check(name, fn):
        try:
            fn()
            results.append((name, True, ""))
        except Exception as exc:
            results.append((name, False, f"{type(exc).__name__}: {exc}"))

    def _dims():
        assert SpaceSpec(2, 1, 1).dim == 16
        assert SpaceSpec(1, 6, 6).dim == 98
        assert SpaceSpec(2, 6, 6).dim == 196
        assert len(build_space(SpaceSpec(2, 2, 2)).states) == 36

    check("space dimensions", _dims)

    def _ladder():
        space = SpaceSpec(1, 4, 1)
        a = annihilator(space, 1)
        n = (a.getH() @ a).diagonal().real
        assert np.allclose(sorted(set(np.round(n, 12))), [0, 1, 2, 3, 4])

    check("ladder operator", _ladder)

    def _trace_preservation():
        space = SpaceSpec(2, 2, 2)
        p = SystemParams(delta1=10.0, delta2=8.0, bath=BathParams(
            alpha_p=calibrate_alpha_p(), temperature=5.0))
        L = build_full_me(p, space).total
        rng = np.random.default_rng(7)
        worst = max(abs(np.sum((L @ vectorize(random_density_matrix(space.dim, rng)))
                               [np.arange(space.dim) * (space.dim + 1)]))
                    for _ in range(5))
        assert worst < 1e-10, worst

    check("trace preservation", _trace_preservation)

    def _calibration():
        alpha = calibrate_alpha_p()
        for T, target in ((5.0, 0.90), (10.0, 0.84), (20.0, 0.72)):
            B = mean_displacement(BathParams(alpha_p=alpha, temperature=T))
            assert abs(B - target) < 0.02, (T, B)
        kern = tabulate_kernel(BathParams(alpha_p=alpha, temperature=5.0))
        kern.assert_decayed()

    check("bath calibration and kernel decay", _calibration)

    def _vacuum_rabi():
        space = SpaceSpec(1, 1, 1)
        p = SystemParams(g2=0.0, delta1=0.0, delta2=0.0)
        from .liouvillian import build_system_hamiltonian

        evals = np.linalg.eigvalsh(build_system_hamiltonian(p, space).toarray())
        assert min(abs(evals - 1.0)) < 1e-10 and min(abs(evals + 1.0)) < 1e-10

    check("vacuum-Rabi doublet", _vacuum_rabi)

    def _pump_balance():
        space = SpaceSpec(1, 1, 1)
        p = SystemParams(g1=0.0, g2=0.0, eta1=2.0, gamma1=0.5, gamma_p1=0.0)
        ss = steady_state(build_full_me(p, space))
        st = photon_stats(ss.rho, space)
        assert abs(st.pop_ee - 2.0 / 2.5) < 1e-8

    check("two-level pump balance", _pump_balance)

    def _witness():
        assert abs(rw_value(2.0, 1.0) - 0.0) < 1e-15
        assert abs(rw_value(4.0, 1.0) - 1.0) < 1e-15
        assert rw_value(1.0, 0.0) is None

    check("radiance witness formula", _witness)

    ok = all(r[1] for r in results)
    if verbose:
        for name, passed, msg in results:
            print(f"{'PASS' if passed else 'FAIL'}  {name}" + (f"  [{msg}]" if msg else ""))
        print("all checks passed" if ok else "CHECK FAILURES PRESENT")
    return ok
