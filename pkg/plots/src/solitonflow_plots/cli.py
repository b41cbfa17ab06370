"""Command line: solitonflow-plot --kind KIND --series PATH
[--snapshots PATH] --out PATH [--no-overlay]."""

import argparse
import sys
from pathlib import Path

from .render import FIGURE_KINDS, ParseError, PlotSpec, render


def build_parser():
    parser = argparse.ArgumentParser(
        prog="solitonflow-plot",
        description="Render static figures from solitonflow run artifacts")
    parser.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    parser.add_argument("--series", help="diagnostics CSV path")
    parser.add_argument("--snapshots", help="snapshots JSONL path")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--no-overlay", action="store_true",
                        help="skip the analytic circle overlay")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    spec = PlotSpec(
        kind=args.kind,
        series_path=Path(args.series) if args.series else None,
        snapshots_path=Path(args.snapshots) if args.snapshots else None,
        out_path=Path(args.out),
        overlay=not args.no_overlay,
    )
    try:
        summary = render(spec)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"input not found: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {summary['out']} ({summary['kind']}, {summary['rows']} rows)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
