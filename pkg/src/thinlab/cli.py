"""Command-line laboratory emitting deterministic CSV artifacts.

Every output file starts with a manifest header (``#``-prefixed
comments) recording the command, its full parameter set and the seed,
so two runs with equal manifests produce byte-identical files.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .domino import (
    class_census_2d,
    closed_form_curves,
    dobrushin_constant_bruteforce,
    dobrushin_constant_closed,
    pairwise_tv_curves,
    threshold_disagreement,
    threshold_dobrushin,
    threshold_simple,
    FORBIDDEN_CODE,
    REALIZED_CODES,
)
from .exact import boundary_sweep, first_layer_kernel
from .lattice import Config, Region, UnfixedArea, outer_boundary

USAGE_ERROR = 2
VERIFY_ERROR = 1


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.12g" % float(x)
    return str(x)


def write_csv(path: Path, manifest: dict, columns: list[str], rows) -> None:
    import csv as _csv

    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        for key in sorted(manifest):
            fh.write(f"# {key}: {manifest[key]}\n")
        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _manifest(args, command: str, output: Path) -> dict:
    skip = {"func", "out"}
    params = {
        k: v
        for k, v in sorted(vars(args).items())
        if k not in skip and v is not None
    }
    return {
        "command": command,
        "params": " ".join(f"{k}={v}" for k, v in params.items()),
        "seed": getattr(args, "seed", 0),
        "version": __version__,
        "output": output.name,
    }


# -- thresholds --------------------------------------------------------


def cmd_thresholds(args) -> int:
    if not 2 <= args.dmax <= 50:
        print("dmax must lie in [2, 50]", file=sys.stderr)
        return USAGE_ERROR
    rows = []
    for d in range(2, args.dmax + 1):
        rows.append(
            (d, threshold_dobrushin(d), threshold_disagreement(d), threshold_simple(d))
        )
    out = Path(args.out) / "thresholds.csv"
    write_csv(
        out,
        _manifest(args, "thresholds", out),
        ["d", "p_dobrushin", "p_disagreement", "p_simple"],
        rows,
    )
    print(f"wrote {out} ({len(rows)} rows)")
    return 0


# -- tv-curves ---------------------------------------------------------


def cmd_tv_curves(args) -> int:
    if not 0 < args.step <= 0.1:
        print("step must lie in (0, 0.1]", file=sys.stderr)
        return USAGE_ERROR
    n = int(round(1.0 / args.step))
    grid = [i * args.step for i in range(1, n + 1)]
    rows = []
    for p in grid:
        rho, q, u, v = closed_form_curves(p)
        rows.append((p, rho, q, u, v))
    out = Path(args.out) / "tv_curves.csv"
    write_csv(
        out,
        _manifest(args, "tv-curves", out),
        ["p", "rho", "q", "u", "v"],
        rows,
    )
    pairs, _values = pairwise_tv_curves(grid)
    out2 = Path(args.out) / "tv_pairs.csv"
    write_csv(
        out2,
        _manifest(args, "tv-curves", out2),
        ["pair_id", "class_a", "class_b", "curve_label"],
        pairs,
    )
    labels = sorted({label for _, _, _, label in pairs})
    print(f"wrote {out} and {out2}; {len(labels)} distinct curves: {' '.join(labels)}")
    return 0


# -- box-conditional ---------------------------------------------------


def cmd_box_conditional(args) -> int:
    if args.k not in (3, 4, 5):
        print("k must be one of 3, 4, 5", file=sys.stderr)
        return USAGE_ERROR
    n = int(round(1.0 / args.step))
    grid = [i * args.step for i in range(1, n)]
    rows = boundary_sweep(
        args.k, grid, d=args.dim, pattern=args.pattern, workers=args.workers
    )
    out = Path(args.out) / f"box_conditional_k{args.k}.csv"
    write_csv(
        out,
        _manifest(args, "box-conditional", out),
        ["p", "value_vacant", "value_occupied", "difference"],
        rows,
    )
    print(f"wrote {out} ({len(rows)} rows)")
    return 0


# -- polymer -----------------------------------------------------------


def _window_model(side: int):
    from .polymer import AnnulusContext, PolymerModel

    delta = Region.box(2, side)
    ctx = AnnulusContext.from_regions(
        delta, None, {s: 0 for s in delta.outer_boundary()}
    )
    return PolymerModel(ctx)


def cmd_polymer(args) -> int:
    from .polymer import kp_condition_sums

    model = _window_model(args.side)
    polymers = model.enumerate_polymers(args.max_size)
    rows = []
    for pid, W in enumerate(polymers):
        z = model.weight(W).evaluate(args.p)
        L = model.surrounded_set(W)
        # the surrounded-site exponent is diagnostic only; the rigorous
        # per-polymer bound checked here is p^(|W|/(2d))
        rows.append(
            (
                pid,
                len(W),
                z,
                args.p ** len(L),
                abs(z) <= args.p ** (len(W) / 4) + 1e-12,
            )
        )
    out = Path(args.out) / "polymer_weights.csv"
    write_csv(
        out,
        _manifest(args, "polymer", out),
        ["polymer_id", "size", "weight_at_p", "bound_p_pow_L", "bound_holds"],
        rows,
    )
    print(f"wrote {out} ({len(rows)} polymers)")

    scan_rows = []
    q1 = 0.0
    for i in range(args.scan_points):
        frac = i / max(args.scan_points - 1, 1)
        p = args.scan_pmin * (args.scan_pmax / args.scan_pmin) ** frac
        worst = max(kp_condition_sums(model, p, truncation=args.truncation).values())
        holds = worst <= 1.0
        if holds:
            q1 = max(q1, p)
        scan_rows.append((p, worst, 1.0, holds))
    out2 = Path(args.out) / "kp_scan.csv"
    write_csv(
        out2,
        _manifest(args, "polymer", out2),
        ["p", "kp_sum", "threshold", "holds"],
        scan_rows,
    )
    print(f"wrote {out2}; truncated q1 estimate: {_fmt(q1)}")
    return 0


# -- simulate ----------------------------------------------------------


def cmd_simulate(args) -> int:
    from .sampler import SamplerConfig, annulus_experiment, empirical_thinned_marginal

    if args.mode == "marginal":
        d = args.dim
        window = Region.box(d, 3)
        bnd_sites = sorted(outer_boundary(window.site_set))
        bnd = Config.from_mapping(
            Region.from_sites(bnd_sites), {s: 0 for s in bnd_sites}
        )
        rows = []
        for i in range(1, 10):
            p = i / 10.0
            cfg = SamplerConfig(
                p=p, window=window, seed=args.seed, sweeps=args.samples, boundary=bnd
            )
            est, se = empirical_thinned_marginal(cfg, (0,) * d)
            rows.append((p, est, se, p * (1.0 - p) ** (2 * d)))
        out = Path(args.out) / "thinned_marginal.csv"
        write_csv(
            out,
            _manifest(args, "simulate", out),
            ["p", "estimate", "stderr", "exact"],
            rows,
        )
        print(f"wrote {out}")
        return 0
    if args.mode == "disagreement":
        records = annulus_experiment(
            p=args.p,
            seed=args.seed,
            sweeps=args.sweeps,
            outer_side=args.outer_side,
            hole_side=args.hole_side,
        )
        out = Path(args.out) / "disagreement.csv"
        write_csv(
            out,
            _manifest(args, "simulate", out),
            ["sweep", "disagreement_fraction"],
            [(r.sweep, r.fraction) for r in records],
        )
        print(f"wrote {out}")
        return 0
    print(f"unknown mode {args.mode!r}", file=sys.stderr)
    return USAGE_ERROR


# -- verify ------------------------------------------------------------


def _verify_dobrushin(args, report):
    for p in (0.8, 0.9):
        bf = dobrushin_constant_bruteforce(p)
        cf = dobrushin_constant_closed(p, 2)
        report(f"dobrushin d=2 p={p}", abs(bf - cf) <= 1e-12, f"|{bf}-{cf}|")


def _verify_polymer_identity(args, report):
    from .polymer import (
        AnnulusContext,
        PolymerModel,
        polymer_partition_identity,
    )

    fixtures = []
    plain = Region.from_sites([(r, c) for r in range(3) for c in range(4)])
    for label, v in (("vacant", 0), ("occupied", 1)):
        ctx = AnnulusContext.from_regions(
            plain, None, {s: v for s in plain.outer_boundary()}
        )
        fixtures.append((f"3x4 {label}", ctx))
    holed = Region.from_sites([(r, c) for r in range(5) for c in range(4)])
    lam = Region.from_sites([(2, 1)])
    hole_values = {(2, 1): 0, (1, 1): 0, (3, 1): 0, (2, 0): 0, (2, 2): 0}
    for label, v in (("vacant", 0), ("occupied", 1)):
        ctx = AnnulusContext.from_regions(
            holed,
            lam,
            {s: v for s in holed.outer_boundary()},
            hole_values=hole_values,
        )
        fixtures.append((f"5x4 hole {label}", ctx))
    for label, ctx in fixtures:
        model = PolymerModel(ctx)
        lhs, rhs, equal = polymer_partition_identity(ctx, model)
        report(f"partition identity {label}", equal, "exact integer equality")


def _verify_kp_scan(args, report):
    from .polymer import kp_condition_sums

    model = _window_model(7)
    lo, hi = 1e-5, 5e-2
    worst_lo = max(kp_condition_sums(model, lo, truncation=3).values())
    report(f"kp condition holds at p={lo}", worst_lo <= 1.0, f"sum={worst_lo}")
    worst_hi = max(kp_condition_sums(model, hi, truncation=3).values())
    report(f"kp condition fails at p={hi}", worst_hi > 1.0, f"sum={worst_hi}")


def _verify_class_census(args, report):
    census = class_census_2d()
    codes = sorted(census)
    report(
        "7 classes, (-,+,+,+) absent",
        codes == sorted(REALIZED_CODES) and FORBIDDEN_CODE not in codes,
        f"codes={codes}",
    )
    report(
        "all classes admit the full pair",
        all(code & 8 for code in codes),
        "high flag set everywhere",
    )


def _verify_sampler_oracle(args, report):
    from .sampler import SamplerConfig, domino_histogram, empirical_thinned_marginal
    from .domino import domino_sites

    d = 2
    window = Region.box(d, 3)
    bnd_sites = sorted(outer_boundary(window.site_set))
    bnd = Config.from_mapping(Region.from_sites(bnd_sites), {s: 0 for s in bnd_sites})
    for p in (0.3, 0.7):
        cfg = SamplerConfig(
            p=p, window=window, seed=args.seed, sweeps=10**6, boundary=bnd
        )
        est, se = empirical_thinned_marginal(cfg, (0, 0))
        exact = p * (1 - p) ** 4
        report(
            f"thinned marginal p={p}",
            abs(est - exact) <= 4 * se,
            f"est={est} exact={exact} sigma={se}",
        )
    # heat bath on a 2-domino window against the exact constraint kernel
    w = Region.from_sites([(0, 0), (1, 0), (0, 1), (1, 1)])
    bsites = sorted(outer_boundary(w.site_set))
    bnd2 = Config.from_mapping(Region.from_sites(bsites), {s: 0 for s in bsites})
    area = UnfixedArea(sites=w.site_set, dim=2)
    p = 0.4
    exact = {
        bits: first_layer_kernel(p, w, area, Config(w, bits), ext={})
        for bits in range(16)
    }
    sweeps = 200000
    cfg = SamplerConfig(p=p, window=w, seed=args.seed, sweeps=sweeps, boundary=bnd2)
    hist = domino_histogram(cfg, area, burn_in=1000)
    ok = True
    detail = []
    for dom, emp in sorted(hist.items()):
        ex = np.zeros(4)
        left, right = domino_sites(dom)
        for bits, pr in exact.items():
            c = Config(w, bits)
            ex[2 * c[left] + c[right]] += pr
        # autocorrelation-aware tolerance: five i.i.d. sigmas
        sig = np.sqrt(ex * (1 - ex) / (sweeps - 1000))
        z = float(np.max(np.abs(emp - ex) / np.maximum(sig, 1e-12)))
        detail.append(f"{dom}:z={z:.2f}")
        ok = ok and z <= 5.0
    report("heat bath matches exact kernel", ok, " ".join(detail))


VERIFY_SUITES = {
    "dobrushin-bruteforce": _verify_dobrushin,
    "polymer-identity": _verify_polymer_identity,
    "kp-scan": _verify_kp_scan,
    "class-census": _verify_class_census,
    "sampler-oracle": _verify_sampler_oracle,
}


def cmd_verify(args) -> int:
    suite = VERIFY_SUITES.get(args.suite)
    if suite is None:
        print(f"unknown suite {args.suite!r}", file=sys.stderr)
        return USAGE_ERROR
    rows = []
    failed = False

    def report(name: str, ok: bool, detail: str = "") -> None:
        nonlocal failed
        status = "PASS" if ok else "FAIL"
        print(f"{name}: {status}" + (f"  [{detail}]" if detail else ""))
        rows.append((name, status, detail))
        failed = failed or not ok

    suite(args, report)
    out = Path(args.out) / f"verify_{args.suite}.csv"
    write_csv(
        out, _manifest(args, "verify", out), ["check", "status", "detail"], rows
    )
    return VERIFY_ERROR if failed else 0


# -- parser ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thinlab",
        description="exact and Monte Carlo laboratory for thinned lattice fields",
    )
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument(
        "--workers",
        type=int,
        default=None,
        help="worker count (default: THINLAB_WORKERS or available parallelism)",
    )
    parser.add_argument("--seed", type=int, default=0, help="64-bit RNG seed")
    # the global flags are also accepted after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=argparse.SUPPRESS)
    common.add_argument("--workers", type=int, default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    s = add_parser("thresholds", help="uniqueness-threshold table by dimension")
    s.add_argument("--dmax", type=int, default=10)
    s.set_defaults(func=cmd_thresholds)

    s = add_parser("tv-curves", help="pairwise kernel distance curves")
    s.add_argument("--step", type=float, default=0.001)
    s.set_defaults(func=cmd_tv_curves)

    s = add_parser("box-conditional", help="exact box conditional vs boundary")
    s.add_argument("--k", type=int, required=True, help="box side (3, 4 or 5)")
    s.add_argument("--step", type=float, default=0.02)
    s.add_argument("--dim", type=int, default=2)
    s.add_argument("--pattern", choices=["zero", "alt"], default="zero")
    s.set_defaults(func=cmd_box_conditional)

    s = add_parser("polymer", help="polymer weights and convergence scan")
    s.add_argument("--side", type=int, default=7)
    s.add_argument("--p", type=float, default=0.1)
    s.add_argument("--max-size", type=int, default=3)
    s.add_argument("--truncation", type=int, default=3)
    s.add_argument("--scan-pmin", type=float, default=1e-5)
    s.add_argument("--scan-pmax", type=float, default=1e-2)
    s.add_argument("--scan-points", type=int, default=7)
    s.set_defaults(func=cmd_polymer)

    s = add_parser("simulate", help="Monte Carlo experiments")
    s.add_argument("--mode", choices=["marginal", "disagreement"], default="marginal")
    s.add_argument("--samples", type=int, default=10**6)
    s.add_argument("--dim", type=int, default=2)
    s.add_argument("--p", type=float, default=0.5)
    s.add_argument("--sweeps", type=int, default=400)
    s.add_argument("--outer-side", type=int, default=16)
    s.add_argument("--hole-side", type=int, default=4)
    s.set_defaults(func=cmd_simulate)

    s = add_parser("verify", help="run an invariant suite")
    s.add_argument("--suite", required=True, choices=sorted(VERIFY_SUITES))
    s.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else 0
    if args.workers is not None:
        if args.workers < 1:
            print("workers must be positive", file=sys.stderr)
            return USAGE_ERROR
        os.environ["THINLAB_WORKERS"] = str(args.workers)
    if not 0 <= args.seed < 2**64:
        print("seed must be an unsigned 64-bit integer", file=sys.stderr)
        return USAGE_ERROR
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
