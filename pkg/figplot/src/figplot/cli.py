"""figplot <figure-id> <csv...> --out <png> [--clip Q]"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import CsvFormatError, PlotJob, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="figplot",
        description="render solution-surface CSV exports to PNG images")
    parser.add_argument("figure_id", type=int, choices=[2, 3, 4, 5],
                        metavar="figure-id",
                        help="which figure the CSVs belong to (2-5)")
    parser.add_argument("csv", nargs="+", help="input CSV file(s)")
    parser.add_argument("--out", required=True, help="output PNG path")
    parser.add_argument("--clip", type=float, default=0.99, metavar="Q",
                        help="symmetric clip quantile of |value| (default 0.99)")
    args = parser.parse_args(argv)
    if not 0.0 < args.clip <= 1.0:
        parser.error("--clip must be in (0, 1]")
    job = PlotJob(inputs=[Path(c) for c in args.csv], figure_id=args.figure_id,
                  output=Path(args.out), clip_quantile=args.clip)
    try:
        path = render(job)
    except CsvFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
