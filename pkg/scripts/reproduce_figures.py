#!/usr/bin/env python3
"""Run every figure preset and render the plots in one go.

The sweep CSVs and manifests land in OUT/data, the images in OUT/plots.
Expect a couple of hours at the full preset grids on a small machine;
--fast trims grids and truncation for a quick smoke reproduction.
"""

import argparse
import os
import sys
import time

import numpy as np

from bicavity.presets import PRESETS
from bicavity.sweeps import TruncationPolicy, run_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", required=True)
    ap.add_argument("--figs", nargs="+", default=sorted(PRESETS),
                    choices=sorted(PRESETS))
    ap.add_argument("--workers", type=int, default=2)
    ap.add_argument("--fast", action="store_true",
                    help="coarse grids and low truncation (smoke run)")
    args = ap.parse_args()

    data_dir = os.path.join(args.out, "data")
    plot_dir = os.path.join(args.out, "plots")
    for name in args.figs:
        cfg = PRESETS[name]()
        if args.fast:
            cfg.truncation = TruncationPolicy(start=2, max_n=4, step=2,
                                              rel_tol=0.05)
            grid = np.asarray(cfg.grid)
            cfg.grid = tuple(np.linspace(grid[0], grid[-1], 7))
            cfg.linewidth_stride = 3
        t0 = time.time()
        res = run_sweep(cfg, data_dir, workers=args.workers)
        print(f"{name}: {time.time() - t0:.0f}s, {res.n_errors} errors, "
              f"{res.n_unconverged} unconverged", flush=True)
        try:
            from plotviz.render import render_preset

            result = render_preset(name, data_dir, plot_dir)
            print(f"  rendered {', '.join(os.path.basename(f) for f in result.files)}")
        except ImportError:
            print("  plotviz not installed; skipping rendering", file=sys.stderr)


if __name__ == "__main__":
    main()
