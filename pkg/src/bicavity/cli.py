"""Command-line entry point: run sweeps, presets, and the invariant check."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np


def _add_run_opts(p):
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: BICAVITY_WORKERS or 1)")
    p.add_argument("--allow-unconverged", action="store_true",
                   help="exit 0 even when points hit the truncation cap")


def _finish(result, allow_unconverged: bool) -> int:
    print(f"wrote {len(result.csv_paths)} CSV file(s); manifest {result.manifest_path}")
    if result.n_errors:
        print(f"{result.n_errors} point(s) failed (see error column)", file=sys.stderr)
        return 1
    if result.n_unconverged and not allow_unconverged:
        print(f"{result.n_unconverged} point(s) unconverged at the truncation cap",
              file=sys.stderr)
        return 3
    return 0


def _cmd_run(args) -> int:
    from .config import load_config
    from .sweeps import run_sweep

    cfg = load_config(args.config)
    result = run_sweep(cfg, args.out, workers=args.workers)
    return _finish(result, args.allow_unconverged)


def _cmd_preset(args) -> int:
    from .presets import PRESETS
    from .sweeps import TruncationPolicy, run_sweep
    from dataclasses import replace

    cfg = PRESETS[args.name]()
    if args.trunc_max is not None:
        cfg.truncation = TruncationPolicy(
            start=min(cfg.truncation.start, args.trunc_max),
            max_n=args.trunc_max, step=cfg.truncation.step,
            rel_tol=cfg.truncation.rel_tol)
    if args.grid_points is not None:
        grid = np.asarray(cfg.grid)
        cfg.grid = tuple(np.linspace(grid[0], grid[-1], args.grid_points))
    result = run_sweep(cfg, args.out, workers=args.workers)
    return _finish(result, args.allow_unconverged)


def _cmd_check(_args) -> int:
    """Fast invariant suite: operators, kernels, solver, witness formula."""
    from .checks import run_checks

    ok = run_checks(verbose=True)
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bicavity",
        description="Two pumped QDs in a bimodal cavity: steady-state sweeps, "
                    "photon statistics, radiance witness, EERs, linewidths.")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="run a TOML sweep configuration")
    p_run.add_argument("config")
    _add_run_opts(p_run)
    p_run.set_defaults(fn=_cmd_run)

    p_pre = sub.add_parser("preset", help="run a canned figure sweep")
    from .presets import PRESETS

    p_pre.add_argument("name", choices=sorted(PRESETS))
    _add_run_opts(p_pre)
    p_pre.add_argument("--trunc-max", type=int, default=None,
                       help="override the truncation cap (smaller = faster)")
    p_pre.add_argument("--grid-points", type=int, default=None,
                       help="override the number of grid points")
    p_pre.set_defaults(fn=_cmd_preset)

    p_chk = sub.add_parser("check", help="run the quick invariant suite")
    p_chk.set_defaults(fn=_cmd_check)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
