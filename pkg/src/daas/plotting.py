"""
Figures for a sweep table (the rows written by ``daas sweep``).

Three PNG files are produced:

* ``blocking_parts_rf.png``: fragmentation, resource and DaaS parts of the
  overall random-fit blocking against load, one line style per defrag rate;
* ``blocking_total.png``: overall blocking against load per policy and rate;
* ``gain.png``: overall gain (blocking without minus with DaaS) against load.

matplotlib is only imported when a figure is drawn.
"""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

PART_COLUMNS = (("bp_frag", "fragmentation"), ("bp_resource", "resource"), ("bp_daas", "DaaS"))
LINESTYLES = ("-", "--", ":", "-.")

SCRIPT_TEMPLATE = '''#!/usr/bin/env python3
"""Redraw the sweep figures from {csv_name}.

usage: python {script_name} [CSV] [OUTPUT_DIR]
"""
import sys

from daas.plotting import render_figures
from daas.sweep import read_csv

csv_path = sys.argv[1] if len(sys.argv) > 1 else {csv_path!r}
out_dir = sys.argv[2] if len(sys.argv) > 2 else {out_dir!r}
for path in render_figures(read_csv(csv_path), out_dir):
    print(path)
'''


def _series(rows, source):
    """{(policy, mu_d): sorted [(load, row)]} for the overall rows of one source."""
    out = defaultdict(list)
    for r in rows:
        if r["class"] == "overall" and r["source"] == source and not r["error"]:
            out[r["policy"], float(r["mu_d"])].append((float(r["load_erlang"]), r))
    return {key: sorted(v, key=lambda t: t[0]) for key, v in sorted(out.items())}


def _pick_source(rows) -> str:
    return "analytic" if any(r["source"] == "analytic" for r in rows) else "sim"


def _positive(xs, ys):
    pts = [(x, y) for x, y in zip(xs, ys) if y > 0]
    return [p[0] for p in pts], [p[1] for p in pts]


def render_figures(rows: list[dict], out_dir: str | Path, source: str | None = None) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    source = source or _pick_source(rows)
    series = _series(rows, source)
    rates = sorted({mu for _, mu in series})
    style = {mu: LINESTYLES[i % len(LINESTYLES)] for i, mu in enumerate(rates)}
    written = []

    fig, ax = plt.subplots(figsize=(6, 4.5))
    for (policy, mu), pts in series.items():
        if policy != "RF":
            continue
        loads = [p[0] for p in pts]
        for (col, label), color in zip(PART_COLUMNS, ("C0", "C1", "C2")):
            if col == "bp_daas" and mu == 0:
                continue
            xs, ys = _positive(loads, [float(p[1][col]) for p in pts])
            ax.semilogy(xs, ys, style[mu], color=color, marker="o", ms=3,
                        label=f"{label}, $\\mu_d$={mu:g}")
    ax.set_xlabel("load (Erlang)")
    ax.set_ylabel("blocking probability")
    ax.set_title(f"RF blocking parts ({source})")
    ax.legend(fontsize=7)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    written.append(out / "blocking_parts_rf.png")
    fig.savefig(written[-1], dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4.5))
    for (policy, mu), pts in series.items():
        xs, ys = _positive([p[0] for p in pts], [float(p[1]["bp_total"]) for p in pts])
        ax.semilogy(xs, ys, style[mu], color="C0" if policy == "RF" else "C3", marker="o", ms=3,
                    label=f"{policy}, $\\mu_d$={mu:g}")
    ax.set_xlabel("load (Erlang)")
    ax.set_ylabel("overall blocking probability")
    ax.legend(fontsize=7)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    written.append(out / "blocking_total.png")
    fig.savefig(written[-1], dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4.5))
    for (policy, mu), pts in series.items():
        if mu == 0:
            continue
        gains = [(p[0], float(p[1]["gain_total"])) for p in pts if p[1]["gain_total"]]
        if gains:
            ax.plot(*zip(*gains), style[mu], color="C0" if policy == "RF" else "C3", marker="o", ms=3,
                    label=f"{policy}, $\\mu_d$={mu:g}")
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xlabel("load (Erlang)")
    ax.set_ylabel("change in blocking probability")
    ax.legend(fontsize=7)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    written.append(out / "gain.png")
    fig.savefig(written[-1], dpi=120)
    plt.close(fig)
    return written


def write_plot_script(script_path: str | Path, csv_path: str | Path, out_dir: str | Path = "figures") -> Path:
    path = Path(script_path)
    path.write_text(SCRIPT_TEMPLATE.format(csv_name=Path(csv_path).name, script_name=path.name,
                                           csv_path=str(csv_path), out_dir=str(out_dir)))
    return path
