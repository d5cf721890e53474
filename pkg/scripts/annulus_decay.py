#!/usr/bin/env python3
"""Boundary-influence decay of the coupled heat-bath chains.

Usage: python scripts/annulus_decay.py [--sweeps 300] [--seed 17]

For a grid of densities, runs the vacant-vs-occupied exterior coupling
on a 16x16 window with a 4x4 observation hole and prints the tail mean
of the disagreement fraction on the watched dominoes.  High density
means strong constraint screening, so the tail should shrink with p.
"""

import argparse
import statistics

from thinlab.sampler import annulus_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sweeps", type=int, default=300)
    ap.add_argument("--seed", type=int, default=17)
    ap.add_argument("--outer-side", type=int, default=16)
    ap.add_argument("--hole-side", type=int, default=4)
    args = ap.parse_args()

    print("p,tail_disagreement")
    for i in range(1, 20):
        p = round(0.05 * i, 2)
        records = annulus_experiment(
            p=p,
            seed=args.seed,
            sweeps=args.sweeps,
            outer_side=args.outer_side,
            hole_side=args.hole_side,
        )
        tail = statistics.fmean(r.fraction for r in records[-args.sweeps // 4:])
        print(f"{p},{tail:.6f}")


if __name__ == "__main__":
    main()
