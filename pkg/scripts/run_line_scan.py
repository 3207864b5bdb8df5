#!/usr/bin/env python3
"""Reproduce the gain-line scan: gain, group index, and intensity-difference
noise versus detuning, written to line_scan.csv."""

import argparse
import sys

from fastlight.cli import main


def cli():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="out/line_scan")
    parser.add_argument("--seed", type=int, default=12345)
    parser.add_argument("--traces", type=int, default=20)
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()
    return main(["line-scan", "--preset", "fig2-line",
                 "--out-dir", args.out_dir, "--seed", str(args.seed),
                 "--traces", str(args.traces), "--jobs", str(args.jobs)])


if __name__ == "__main__":
    sys.exit(cli())
