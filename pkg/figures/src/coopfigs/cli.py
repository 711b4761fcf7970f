"""Standalone plotting CLI: coopsim-plot --kind <k> --in <csv...> --out <img>."""

from __future__ import annotations

import argparse
import sys

from .render import DEFAULT_WINDOW, KINDS, FigureSpec, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="coopsim-plot",
        description="Render experiment CSV logs as figures",
    )
    parser.add_argument("--kind", required=True, choices=sorted(KINDS))
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        metavar="CSV", help="input CSV file(s)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--window", type=int, default=DEFAULT_WINDOW,
                        help=f"trailing smoothing window (default {DEFAULT_WINDOW})")
    args = parser.parse_args(argv)
    try:
        spec = FigureSpec(inputs=tuple(args.inputs), kind=args.kind,
                          output=args.out, window=args.window)
        render(spec)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
