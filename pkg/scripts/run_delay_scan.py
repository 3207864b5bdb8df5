#!/usr/bin/env python3
"""Scan the correlation delay and band squeezing versus line offset, written
to delay_scan.csv (full-band and 0.1-3 MHz band delays per point)."""

import argparse
import sys

from fastlight.cli import main


def cli():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--preset", default="fig2-line",
                        choices=["fig2-line", "fig4-advance"])
    parser.add_argument("--out-dir", default="out/delay_scan")
    parser.add_argument("--seed", type=int, default=12345)
    parser.add_argument("--traces", type=int, default=20)
    parser.add_argument("--samples", type=int, default=1 << 18)
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()
    return main(["delay-scan", "--preset", args.preset,
                 "--out-dir", args.out_dir, "--seed", str(args.seed),
                 "--traces", str(args.traces), "--samples", str(args.samples),
                 "--jobs", str(args.jobs)])


if __name__ == "__main__":
    sys.exit(cli())
