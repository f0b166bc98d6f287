"""Deterministic table rendering (TSV and JSON) and optional figures."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any


@dataclass
class Table:
    name: str
    columns: list
    rows: list = field(default_factory=list)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"{self.name}: expected {len(self.columns)} values, got {len(values)}")
        self.rows.append(tuple(values))

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def fmt(x: Any) -> str:
    """Stable text form of a cell: exact rationals as ``p/q``, floats to 12 significant digits."""
    if x is None:
        return "-"
    if isinstance(x, bool):
        return "yes" if x else "no"
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, float):
        if math.isnan(x) or math.isinf(x):
            return str(x)
        return f"{x:.12g}"
    if isinstance(x, (tuple, list)):
        return " ".join(fmt(y) for y in x) if x else "()"
    return str(x)


def _jsonable(x: Any):
    if isinstance(x, Fraction):
        return {"num": x.numerator, "den": x.denominator}
    if isinstance(x, float):
        return float(f"{x:.12g}")
    if isinstance(x, (tuple, list)):
        return [_jsonable(y) for y in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if hasattr(x, "to_json"):
        return x.to_json()
    if isinstance(x, (int, str, bool)) or x is None:
        return x
    return str(x)


def render_tsv(tables: list, messages: list = ()) -> str:
    out = []
    for i, t in enumerate(tables):
        if len(tables) > 1:
            if i:
                out.append("")
            out.append(f"# {t.name}")
        out.append("\t".join(t.columns))
        out.extend("\t".join(fmt(v) for v in row) for row in t.rows)
    out.extend(messages)
    return "\n".join(out) + "\n"


def render_json(tables: list, messages: list = (), meta: dict | None = None) -> str:
    doc = {
        "meta": _jsonable(meta or {}),
        "tables": [
            {"name": t.name, "columns": list(t.columns),
             "rows": [dict(zip(t.columns, (_jsonable(v) for v in r))) for r in t.rows]}
            for t in tables
        ],
        "messages": list(messages),
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def render(tables: list, fmt_name: str = "tsv", messages: list = (), meta: dict | None = None) -> str:
    if fmt_name == "json":
        return render_json(tables, messages, meta)
    return render_tsv(tables, messages)


# -- figures ------------------------------------------------------------------------

def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["font.size"] = 9
    plt.rcParams["svg.hashsalt"] = "pimsner-lab"
    return plt


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {"Software": None} if path.suffix == ".png" else {"Date": None} if path.suffix in (".svg", ".pdf") else {}
    fig.savefig(path, metadata=meta)
    return path


def plot_spectrum(table: Table, path: Path, title: str = "") -> Path:
    """Multiplicity of each eigenvalue of D, from a spectrum table."""
    plt = _pyplot()
    mult: dict = {}
    for psi, rank in zip(table.column("psi"), table.column("rank")):
        mult[float(psi)] = mult.get(float(psi), 0) + int(rank)
    xs = sorted(mult)
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.bar(xs, [mult[x] for x in xs], width=0.6, color="tab:blue")
    ax.set_yscale("log")
    ax.set_xlabel("eigenvalue of D")
    ax.set_ylabel("multiplicity in window")
    ax.set_title(title)
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    fig.tight_layout()
    out = _save(fig, path)
    plt.close(fig)
    return out


def plot_commutators(table: Table, path: Path, title: str = "") -> Path:
    """Truncated commutator norms against depth, one line per generator."""
    plt = _pyplot()
    series: dict = {}
    for g, d, v in zip(table.column("generator"), table.column("depth"), table.column("norm")):
        series.setdefault(g, []).append((d, v))
    fig, ax = plt.subplots(figsize=(5, 3))
    for g in sorted(series):
        pts = sorted(series[g])
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=g)
    bound = max(table.column("bound"), default=None)
    if bound is not None:
        ax.axhline(bound, color="grey", linestyle="--", linewidth=0.8, label="bound")
    ax.set_xlabel("truncation depth d")
    ax.set_ylabel("||[D, S_e]||")
    ax.set_title(title)
    ax.legend(fontsize=7)
    fig.tight_layout()
    out = _save(fig, path)
    plt.close(fig)
    return out


def plot_theta(table: Table, path: Path, title: str = "") -> Path:
    """Shell sums of the heat trace on a log scale."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.semilogy(table.column("shell"), table.column("shell_sum"), marker="o")
    ax.set_xlabel("shell k + |n|")
    ax.set_ylabel("shell sum of Tr exp(-tD^2)")
    ax.set_title(title)
    fig.tight_layout()
    out = _save(fig, path)
    plt.close(fig)
    return out


PLOTTERS = {"spectrum": plot_spectrum, "commutators": plot_commutators, "theta": plot_theta}


def write_figures(tables: list, directory: str | Path, stem: str, ext: str = "png") -> list:
    """Render every table that has a plotter; returns the written paths."""
    directory = Path(directory)
    written = []
    for t in tables:
        plotter = PLOTTERS.get(t.name)
        if plotter is not None and t.rows:
            written.append(plotter(t, directory / f"{stem}-{t.name}.{ext}", title=stem))
    return written
