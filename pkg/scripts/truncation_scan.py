#!/usr/bin/env python3
"""Convergence table for one parameter point: observables vs photon cutoff.

Useful for checking how far the default truncation ladder is from the
asymptotic value at bright sweep points (the matched-detuning peak keeps
brightening well past n_max = 8).
"""

import argparse
import time

from bicavity.dynamics import steady_state
from bicavity.liouvillian import SystemParams, build_full_me
from bicavity.observables import photon_stats, rw_value
from bicavity.operators import SpaceSpec
from bicavity.phonons import BathParams, calibrate_alpha_p


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--delta", type=float, default=10.0)
    ap.add_argument("--kappa", type=float, default=0.5)
    ap.add_argument("--eta", type=float, default=25.0)
    ap.add_argument("--g2", type=float, default=1.0)
    ap.add_argument("--temperature", type=float, default=5.0,
                    help="bath temperature in K; negative switches EPI off")
    ap.add_argument("--n-max", type=int, nargs="+", default=[4, 6, 8, 10])
    args = ap.parse_args()

    if args.temperature < 0:
        bath = None
    else:
        bath = BathParams(alpha_p=calibrate_alpha_p(),
                          temperature=args.temperature)
    p = SystemParams(delta1=args.delta, delta2=args.delta, g2=args.g2,
                     kappa1=args.kappa, kappa2=args.kappa,
                     eta1=args.eta, eta2=args.eta, bath=bath)
    print(f"{'n_max':>6} {'n1':>10} {'n2':>10} {'rw1':>10} {'g11':>8} {'secs':>7}")
    for n in args.n_max:
        t0 = time.perf_counter()
        space = SpaceSpec(2, n, n)
        st = photon_stats(steady_state(build_full_me(p, space)).rho, space)
        space1 = SpaceSpec(1, n, n)
        st1 = photon_stats(steady_state(build_full_me(p, space1)).rho, space1)
        rw = rw_value(st.n1, st1.n1)
        g11 = float("nan") if st.g11 is None else st.g11
        print(f"{n:>6} {st.n1:>10.5f} {st.n2:>10.5f} "
              f"{rw if rw is not None else float('nan'):>10.4f} "
              f"{g11:>8.4f} {time.perf_counter() - t0:>7.1f}")


if __name__ == "__main__":
    main()
