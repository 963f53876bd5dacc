"""Command-line wrapper: `flocktools extract` and `flocktools plot`."""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, PlotJob, SchemaError, render
from .ingest import CityRequest, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flocktools",
        description="Street-network ingest and figure rendering for simulator CSVs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="download a city street network (needs osmnx)")
    p.add_argument("place", help='e.g. "Paris, France"')
    p.add_argument("--out-file", required=True)

    p = sub.add_parser("plot", help="render a figure from CSV outputs")
    p.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    p.add_argument("--input", action="append", required=True,
                   help="input CSV (repeat for overlays)")
    p.add_argument("--label", action="append", default=None)
    p.add_argument("--baseline", help="metrics CSV supplying reference lines")
    p.add_argument("--out-file", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        if args.command == "extract":
            extract(CityRequest(place=args.place, output_path=args.out_file))
        else:
            job = PlotJob(kind=args.kind, inputs=args.input, output=args.out_file,
                          labels=args.label or [], baseline=args.baseline)
            render(job)
            print(f"wrote {args.out_file}")
        return 0
    except (SchemaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
