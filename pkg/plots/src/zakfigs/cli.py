"""zakfigs render <figure_id> --in <csv> --out <png/svg>."""

from __future__ import annotations

import argparse
import sys

from .io import SchemaError
from .render import FIGURES, render


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="zakfigs",
                                 description="figures from stozak outputs")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure from a CSV")
    p.add_argument("figure_id", choices=sorted(FIGURES))
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", dest="out_path", required=True)
    args = ap.parse_args(argv)
    try:
        render(args.figure_id, args.in_path, args.out_path)
    except FileNotFoundError as exc:
        print(f"input missing: {exc}", file=sys.stderr)
        return 2
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    print(args.out_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
