"""Command-line interface: schemas, determinism and exit codes."""

import csv
import math

import pytest

from thinlab.cli import main


def run(argv):
    return main([str(a) for a in argv])


def read_csv(path):
    comments = []
    data = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                comments.append(line.rstrip("\n"))
            else:
                data.append(line)
    parsed = list(csv.reader(data))
    return comments, parsed[0], parsed[1:]


def test_thresholds_schema_and_values(tmp_path):
    assert run(["--out", tmp_path, "thresholds", "--dmax", 4]) == 0
    comments, header, rows = read_csv(tmp_path / "thresholds.csv")
    assert header == ["d", "p_dobrushin", "p_disagreement", "p_simple"]
    assert any(c.startswith("# command: thresholds") for c in comments)
    table = {int(r[0]): list(map(float, r[1:])) for r in rows}
    assert abs(table[2][0] - 0.9155) < 1e-3
    assert abs(table[3][0] - 0.9663) < 1e-3
    assert abs(table[2][1] - 0.942809) < 1e-6
    for d, (pd, pp, ps) in table.items():
        assert pd < pp < ps


def test_thresholds_usage_error(tmp_path, capsys):
    assert run(["--out", tmp_path, "thresholds", "--dmax", 1]) == 2


def test_unknown_subcommand_usage_error(tmp_path):
    assert run(["--out", tmp_path, "frobnicate"]) == 2


def test_tv_curves_outputs(tmp_path):
    assert run(["--out", tmp_path, "tv-curves", "--step", 0.05]) == 0
    _, header, rows = read_csv(tmp_path / "tv_curves.csv")
    assert header == ["p", "rho", "q", "u", "v"]
    last = list(map(float, rows[-1]))
    assert last[0] == 1.0 and all(x == 0.0 for x in last[1:])
    _, header2, rows2 = read_csv(tmp_path / "tv_pairs.csv")
    assert header2 == ["pair_id", "class_a", "class_b", "curve_label"]
    assert len(rows2) == 21
    assert len({r[3] for r in rows2}) == 8


def test_tv_curves_step_validation(tmp_path):
    assert run(["--out", tmp_path, "tv-curves", "--step", 0.5]) == 2


def test_box_conditional_schema(tmp_path):
    assert run(["--out", tmp_path, "box-conditional", "--k", 3, "--step", 0.1]) == 0
    _, header, rows = read_csv(tmp_path / "box_conditional_k3.csv")
    assert header == ["p", "value_vacant", "value_occupied", "difference"]
    for r in rows:
        p, vac, occ, diff = map(float, r)
        assert math.isclose(diff, vac - occ, abs_tol=1e-12)
        assert math.isclose(occ, p * (1 - p) ** 4, rel_tol=1e-9)


def test_box_conditional_k_validation(tmp_path):
    assert run(["--out", tmp_path, "box-conditional", "--k", 7]) == 2


def test_byte_identical_reruns(tmp_path):
    for sub in ("a", "b"):
        assert run(["--out", tmp_path / sub, "tv-curves", "--step", 0.1]) == 0
    a = (tmp_path / "a" / "tv_curves.csv").read_bytes()
    b = (tmp_path / "b" / "tv_curves.csv").read_bytes()
    assert a == b


def test_simulate_marginal_schema(tmp_path):
    assert (
        run(
            ["--out", tmp_path, "simulate", "--mode", "marginal",
             "--samples", 20000, "--seed", 11]
        )
        == 0
    )
    comments, header, rows = read_csv(tmp_path / "thinned_marginal.csv")
    assert header == ["p", "estimate", "stderr", "exact"]
    assert any("seed: 11" in c for c in comments)
    for r in rows:
        p, est, se, exact = map(float, r)
        assert math.isclose(exact, p * (1 - p) ** 4, rel_tol=1e-12)
        assert abs(est - exact) <= 6 * max(se, 1e-9)


def test_simulate_disagreement_schema(tmp_path):
    assert (
        run(
            ["--out", tmp_path, "simulate", "--mode", "disagreement",
             "--p", 0.9, "--sweeps", 30, "--seed", 2,
             "--outer-side", 12, "--hole-side", 4]
        )
        == 0
    )
    _, header, rows = read_csv(tmp_path / "disagreement.csv")
    assert header == ["sweep", "disagreement_fraction"]
    assert [int(r[0]) for r in rows] == list(range(1, 31))
    assert all(0.0 <= float(r[1]) <= 1.0 for r in rows)


def test_verify_class_census(tmp_path, capsys):
    assert run(["--out", tmp_path, "verify", "--suite", "class-census"]) == 0
    out = capsys.readouterr().out
    assert "7 classes, (-,+,+,+) absent: PASS" in out
    _, header, rows = read_csv(tmp_path / "verify_class-census.csv")
    assert header == ["check", "status", "detail"]
    assert all(r[1] == "PASS" for r in rows)


def test_verify_unknown_suite(tmp_path):
    assert run(["--out", tmp_path, "verify", "--suite", "bogus"]) == 2


def test_polymer_outputs(tmp_path):
    assert (
        run(
            ["--out", tmp_path, "polymer", "--side", 5, "--max-size", 2,
             "--p", 0.1, "--truncation", 1, "--scan-points", 3]
        )
        == 0
    )
    _, header, rows = read_csv(tmp_path / "polymer_weights.csv")
    assert header == ["polymer_id", "size", "weight_at_p", "bound_p_pow_L", "bound_holds"]
    assert all(r[4] == "true" for r in rows)
    _, header2, rows2 = read_csv(tmp_path / "kp_scan.csv")
    assert header2 == ["p", "kp_sum", "threshold", "holds"]
    assert all(float(r[2]) == 1.0 for r in rows2)


def test_workers_flag_validation(tmp_path):
    assert run(["--out", tmp_path, "--workers", 0, "thresholds", "--dmax", 3]) == 2
