"""letf-plot: render the letf CLI's CSV outputs into figure files.

    letf-plot density --in density.csv --out fig.png [--log-y] [--betas 2,-2]
    letf-plot smile   --in smile.csv   --out fig.png [--betas 1,-1,2,-2]

Exit codes: 0 on success, 2 on a schema or argument problem.
"""

from __future__ import annotations

import argparse
import sys

from .csvio import SchemaError
from .render import FigureSpec, render_density, render_smile


def _parse_betas(text):
    if text is None:
        return None
    try:
        return [float(b) for b in text.split(",") if b.strip()]
    except ValueError as exc:
        raise SchemaError(f"bad --betas list {text!r}: {exc}") from exc


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="letf-plot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("density", "smile"):
        p = sub.add_parser(name)
        p.add_argument("--in", dest="csv_path", required=True)
        p.add_argument("--out", dest="out_path", required=True)
        p.add_argument("--betas", default=None,
                       help="comma-separated panel order, defaults to what the CSV holds")
        if name == "density":
            p.add_argument("--log-y", action="store_true")
    args = parser.parse_args(argv)
    try:
        spec = FigureSpec(
            csv_path=args.csv_path,
            kind=args.command,
            out_path=args.out_path,
            panel_betas=_parse_betas(args.betas),
            log_y=getattr(args, "log_y", False),
        )
        path = render_density(spec) if args.command == "density" else render_smile(spec)
    except (SchemaError, OSError, ValueError) as exc:
        print(f"letf-plot: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
