"""Command line interface.

    mala-fig <figure-kind> --input results.csv [more.csv ...] --output fig.png
"""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mala-fig",
        description="Render figures from mala-lab experiment CSVs.",
    )
    parser.add_argument("kind", choices=FIGURE_KINDS, help="figure kind")
    parser.add_argument("--input", nargs="+", required=True, help="input CSV file(s)")
    parser.add_argument("--output", required=True, help="output image path")
    parser.add_argument("--dpi", type=int, default=150)
    parser.add_argument("--width", type=float, default=7.0)
    parser.add_argument("--height", type=float, default=4.5)
    args = parser.parse_args(argv)

    try:
        path = render(args.kind, args.input, args.output,
                      dpi=args.dpi, width=args.width, height=args.height)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(exc, file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
