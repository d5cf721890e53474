#!/usr/bin/env python3
"""Survey polymer weight magnitudes against the size-exponent bound.

Usage: python scripts/weight_bound_survey.py [--side 7] [--max-size 4]

Enumerates all polymers up to --max-size in a vacant-boundary window,
reduces them to dihedral symmetry orbits, and reports the largest ratio
|z_W(p)| / p^{|W|/4} per size over p in {0.05, ..., 0.95}.  A ratio
above 1 would violate the bound; in practice the margin is large.
"""

import argparse
import itertools

import numpy as np

from thinlab.lattice import Region
from thinlab.polymer import AnnulusContext, PolymerModel


def canonical(W):
    best = None
    for sr, sc, swap in itertools.product((1, -1), (1, -1), (False, True)):
        img = tuple(
            sorted((sc * c, sr * r) if swap else (sr * r, sc * c) for r, c in W)
        )
        if best is None or img < best:
            best = img
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--side", type=int, default=7)
    ap.add_argument("--max-size", type=int, default=4)
    args = ap.parse_args()

    delta = Region.box(2, args.side)
    ctx = AnnulusContext.from_regions(
        delta, None, {s: 0 for s in delta.outer_boundary()}
    )
    model = PolymerModel(ctx)
    ps = np.array([0.05 * i for i in range(1, 20)])

    orbits = {}
    for W in model.enumerate_polymers(args.max_size):
        orbits.setdefault(canonical(W), W)
    print(f"{len(orbits)} symmetry orbits up to size {args.max_size}")

    worst = {}
    arg = {}
    for W in orbits.values():
        poly = model.weight(W)
        vals = np.abs([poly.evaluate(p) for p in ps])
        ratio = float(np.max(vals / ps ** (len(W) / 4)))
        if ratio > worst.get(len(W), 0.0):
            worst[len(W)] = ratio
            arg[len(W)] = W
    for size in sorted(worst):
        print(
            f"size {size}: max |z|/p^(|W|/4) = {worst[size]:.6f} at W={arg[size]}"
        )
    assert all(r <= 1.0 for r in worst.values()), "bound violated"
    print("size-exponent bound holds on every orbit")


if __name__ == "__main__":
    main()
