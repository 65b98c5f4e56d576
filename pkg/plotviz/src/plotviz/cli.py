"""CLI: render committed figure presets from sweep CSV directories."""

from __future__ import annotations

import argparse
import sys


def main(argv=None) -> int:
    from .presets import PRESETS
    from .render import render_preset
    from .figspec import PlotDataError

    parser = argparse.ArgumentParser(
        prog="plotviz", description="Render bicavity sweep CSVs as figures.")
    sub = parser.add_subparsers(dest="cmd", required=True)
    p = sub.add_parser("plot", help="render a figure preset")
    p.add_argument("--preset", required=True, choices=sorted(PRESETS))
    p.add_argument("--in", dest="in_dir", required=True,
                   help="directory holding <preset>__<scenario>.csv files")
    p.add_argument("--out", dest="out_dir", required=True)
    p.add_argument("--formats", default="png,svg",
                   help="comma-separated output formats (default png,svg)")
    args = parser.parse_args(argv)

    try:
        result = render_preset(args.preset, args.in_dir, args.out_dir,
                               formats=tuple(args.formats.split(",")))
    except PlotDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {', '.join(result.files)} "
          f"({len(result.series)} plotted series)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
