"""Command-line entry points, one figure per invocation."""

import argparse
import sys

from .figures import METRICS, plot_bars, plot_scatter_grid


def bars_main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="plotkit-bars",
        description="grouped divergence bars from a results CSV")
    ap.add_argument("csv", help="results CSV written by the evaluation suite")
    ap.add_argument("--metric", choices=list(METRICS), default="kl")
    ap.add_argument("--out", required=True, help="output image path")
    args = ap.parse_args(argv)
    try:
        plot_bars(args.csv, args.metric, args.out)
    except (OSError, ValueError) as e:
        print(e, file=sys.stderr)
        return 1
    print(args.out)
    return 0


def scatter_main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="plotkit-scatter",
        description="scatter panels of 3-d sample dumps, one per file")
    ap.add_argument("dumps", nargs="+", help="sample dump or dataset files")
    ap.add_argument("--labels", help="comma-separated panel titles")
    ap.add_argument("--out", required=True, help="output image path")
    args = ap.parse_args(argv)
    labels = args.labels.split(",") if args.labels else None
    try:
        plot_scatter_grid(args.dumps, args.out, labels=labels)
    except (OSError, ValueError) as e:
        print(e, file=sys.stderr)
        return 1
    print(args.out)
    return 0
