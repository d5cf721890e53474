#!/usr/bin/env python3
"""Regenerate every CSV artifact in one run.

Usage: python scripts/make_tables.py [OUTDIR]

Runs each subcommand with the settings used for the shipped figures and
prints the per-step exit status.  OUTDIR defaults to ./out.
"""

import sys

from thinlab.cli import main

STEPS = [
    ["thresholds", "--dmax", "6"],
    ["tv-curves", "--step", "0.01"],
    ["box-conditional", "--k", "3", "--step", "0.02"],
    ["box-conditional", "--k", "4", "--step", "0.02"],
    ["box-conditional", "--k", "5", "--step", "0.02"],
    ["polymer", "--side", "7", "--max-size", "3", "--p", "0.1",
     "--truncation", "2", "--scan-pmin", "1e-5", "--scan-pmax", "1e-2",
     "--scan-points", "7"],
    ["simulate", "--mode", "marginal", "--samples", "200000", "--seed", "1"],
    ["simulate", "--mode", "disagreement", "--p", "0.95", "--sweeps", "300",
     "--seed", "17", "--outer-side", "16", "--hole-side", "4"],
]


def run(outdir: str) -> int:
    worst = 0
    for step in STEPS:
        code = main(["--out", outdir] + step)
        print(f"[{'ok' if code == 0 else f'exit {code}'}] {' '.join(step)}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(run(sys.argv[1] if len(sys.argv) > 1 else "out"))
