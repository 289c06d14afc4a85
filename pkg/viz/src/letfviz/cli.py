"""Command line: render one figure from sweep output files."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .io import SchemaError
from .plots import KINDS, plot


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render a figure from simulate's cells.csv / runs.jsonl.")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--in", dest="in_path", required=True, metavar="FILE")
    parser.add_argument("--out", dest="out_path", required=True, metavar="FILE")
    parser.add_argument("--metric", default="mean_volatility",
                        help="cells.csv column for heatmap/lines "
                             "(default: mean_volatility)")
    args = parser.parse_args(argv)
    try:
        meta = plot(args.kind, args.in_path, args.out_path, metric=args.metric)
    except (SchemaError, FileNotFoundError, ValueError) as exc:
        print(f"plot: error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {meta['path']} ({meta['size_px'][0]}x{meta['size_px'][1]} px)")
    return 0
