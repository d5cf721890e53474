"""Shared figure plumbing: CSV schema validation and deterministic rendering.

Each figure kind consumes the CSV artifacts written by the thinlab CLI
and renders a single vector-graphics (SVG) file.  Rendering is a pure
function of the input files: fixed styles, no timestamps, no model
computation beyond axis scaling.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("svg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams["svg.hashsalt"] = "plots"

KINDS = ("tv-curves", "box-conditional", "thresholds")

SCHEMAS = {
    "tv-curves": ["p", "rho", "q", "u", "v"],
    "box-conditional": ["p", "value_vacant", "value_occupied", "difference"],
    "thresholds": ["d", "p_dobrushin", "p_disagreement", "p_simple"],
}

# caption color convention for the highlighted curves
CURVE_COLORS = {"rho": "red", "q": "grey", "u": "green", "v": "purple"}


class SchemaError(ValueError):
    """Input CSV does not match the expected artifact schema."""


@dataclass(frozen=True)
class FigureSpec:
    inputs: tuple[Path, ...]
    output: Path
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise SchemaError("at least one input CSV is required")


def load_table(path: Path, kind: str) -> dict[str, list[float]]:
    """Read one artifact CSV, enforcing the schema for the figure kind."""
    expected = SCHEMAS[kind]
    with open(path, newline="") as fh:
        rows = list(csv.reader(line for line in fh if not line.startswith("#")))
    if not rows:
        raise SchemaError(f"{path}: no header row")
    header = rows[0]
    for col in expected:
        if col not in header:
            raise SchemaError(f"{path}: missing column {col!r}")
    for col in header:
        if col not in expected:
            raise SchemaError(f"{path}: unexpected column {col!r}")
    if header != expected:
        raise SchemaError(f"{path}: columns out of order {header!r}")
    if len(rows) == 1:
        raise SchemaError(f"{path}: no data rows")
    table = {col: [] for col in expected}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(expected):
            raise SchemaError(f"{path}: line {lineno}: wrong field count")
        for col, cell in zip(expected, row):
            try:
                table[col].append(float(cell))
            except ValueError:
                raise SchemaError(
                    f"{path}: line {lineno}: non-numeric value in column {col!r}"
                ) from None
    return table


def _panel_label(path: Path) -> str:
    m = re.search(r"_k(\d+)", path.stem)
    return f"k = {m.group(1)}" if m else path.stem


def _save(fig, output: Path) -> None:
    output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(output, format="svg", metadata={"Date": None})
    plt.close(fig)


def _render_tv_curves(tables, spec):
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    table = tables[0]
    for name, color in CURVE_COLORS.items():
        label = {"rho": r"$\rho$"}.get(name, name)
        ax.plot(table["p"], table[name], color=color, label=label)
    ax.set_xlabel("p")
    ax.set_ylabel("total variation")
    ax.set_xlim(0, 1)
    ax.legend(frameon=False)
    _save(fig, spec.output)


def _render_box_conditional(tables, spec):
    n = len(tables)
    fig, axes = plt.subplots(1, n, figsize=(3.2 * n, 3.2), sharey=True)
    if n == 1:
        axes = [axes]
    for ax, table, path in zip(axes, tables, spec.inputs):
        ax.plot(table["p"], table["value_vacant"], color="tab:blue",
                label="vacant boundary")
        ax.plot(table["p"], table["value_occupied"], color="tab:orange",
                label="occupied boundary")
        ax.plot(table["p"], table["difference"], color="black",
                linestyle="--", label="difference")
        ax.axhline(0.0, color="0.8", linewidth=0.6, zorder=0)
        ax.set_title(_panel_label(Path(path)))
        ax.set_xlabel("p")
    axes[0].set_ylabel("conditional probability")
    axes[0].legend(frameon=False, fontsize=8)
    fig.tight_layout()
    _save(fig, spec.output)


def _render_thresholds(tables, spec):
    table = tables[0]
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.plot(table["d"], table["p_dobrushin"], marker="o",
            color="tab:blue", label="Dobrushin")
    ax.plot(table["d"], table["p_disagreement"], marker="s",
            color="tab:red", label="disagreement percolation")
    ax.set_xlabel("dimension d")
    ax.set_ylabel("uniqueness threshold")
    ax.legend(frameon=False)
    _save(fig, spec.output)


def render(spec: FigureSpec) -> Path:
    """Validate every input against the kind's schema, then draw."""
    tables = [load_table(Path(p), spec.kind) for p in spec.inputs]
    {
        "tv-curves": _render_tv_curves,
        "box-conditional": _render_box_conditional,
        "thresholds": _render_thresholds,
    }[spec.kind](tables, spec)
    return spec.output


def script_main(kind: str, argv=None) -> int:
    """Shared argv handling for the one-script-per-kind entry points."""
    import argparse
    import sys

    ap = argparse.ArgumentParser(description=f"Render the {kind} figure.")
    ap.add_argument("--in", dest="inputs", nargs="+", required=True,
                    help="input CSV file(s)")
    ap.add_argument("--out", required=True, help="output SVG path")
    args = ap.parse_args(argv)
    try:
        spec = FigureSpec(
            inputs=tuple(Path(p) for p in args.inputs),
            output=Path(args.out),
            kind=kind,
        )
        render(spec)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0
