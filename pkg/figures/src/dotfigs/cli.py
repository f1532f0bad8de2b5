"""Command line: render every recognized CSV in a directory.

Exit codes follow the simulation CLI: 0 success, 2 usage, 1 failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import matplotlib.pyplot as plt

from .figures import render, save
from .loader import discover


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dotfigs",
        description="Render figures from a directory of simulation CSV "
                    "artifacts (PNG and PDF by default).")
    parser.add_argument("csv_dir", help="directory holding the CSV artifacts")
    parser.add_argument("--out", default=None,
                        help="output directory (default: the CSV directory)")
    parser.add_argument("--formats", default="png,pdf",
                        help="comma separated image formats")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not os.path.isdir(args.csv_dir):
        print(f"error: {args.csv_dir} is not a directory", file=sys.stderr)
        return 2
    formats = tuple(f.strip().lstrip(".")
                    for f in args.formats.split(",") if f.strip())
    if not formats:
        print("error: no output formats given", file=sys.stderr)
        return 2

    out_dir = args.out if args.out is not None else args.csv_dir
    recipes = discover(args.csv_dir)
    if not recipes:
        print(f"error: no recognized CSV artifacts under {args.csv_dir}",
              file=sys.stderr)
        return 1
    for recipe in recipes:
        try:
            fig = render(recipe)
            try:
                paths = save(fig, out_dir, recipe.stem, formats)
            finally:
                plt.close(fig)
        except (ValueError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        for path in paths:
            print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
