"""Command line entry point: ``mpgplots render --kind ... --in ... --out ...``."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .figures import FIGURE_KINDS, FigureSpec, PlotError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpgplots",
        description="Render figures from learning-run CSV traces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("render", help="render one figure from trace CSVs")
    r.add_argument("--kind", required=True, choices=FIGURE_KINDS,
                   help="which figure to draw")
    r.add_argument("--in", dest="inputs", required=True, nargs="+",
                   metavar="CSV", help="input CSV paths or glob patterns")
    r.add_argument("--out", dest="output", required=True,
                   help="output image path (.png, .svg, or .pdf)")
    r.add_argument("--log-x", action="store_true", help="log-scale x axis")
    scale = r.add_mutually_exclusive_group()
    scale.add_argument("--log-y", dest="log_y", action="store_true",
                       default=None, help="force a log-scale y axis")
    scale.add_argument("--linear-y", dest="log_y", action="store_false",
                       help="force a linear y axis")
    r.add_argument("--title", help="optional figure title")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(
            inputs=tuple(args.inputs),
            kind=args.kind,
            output=args.output,
            log_x=args.log_x,
            log_y=args.log_y,
            title=args.title,
        )
        path = render(spec)
    except PlotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
