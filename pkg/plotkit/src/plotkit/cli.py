"""plotkit command line: render figures from harness CSVs."""

from __future__ import annotations

import argparse
import sys

from .figures import SchemaError, plot_convergence, plot_sweep


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plotkit",
        description="Figures from spcabeam CSV artifacts")
    sub = parser.add_subparsers(dest="command", required=True)

    p_conv = sub.add_parser("convergence",
                            help="weighted sum-rate vs iteration")
    p_conv.add_argument("csv", nargs="+", help="trajectory CSV file(s)")
    p_conv.add_argument("--out", required=True, help="output image (png/svg)")
    p_conv.add_argument("--labels", help="comma-separated series labels")

    p_sweep = sub.add_parser("sweep", help="mean sum-rate vs a sweep axis")
    p_sweep.add_argument("csv", help="aggregate CSV file")
    p_sweep.add_argument("--axis", required=True,
                         help="axis column name, e.g. p_max_dbw or epsilon")
    p_sweep.add_argument("--out", required=True, help="output image (png/svg)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "convergence":
            labels = args.labels.split(",") if args.labels else None
            series = plot_convergence(args.csv, args.out, labels=labels)
            print(f"wrote {args.out} ({len(series)} series)")
        else:
            plot_sweep(args.csv, args.axis, args.out)
            print(f"wrote {args.out}")
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
