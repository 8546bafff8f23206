"""Figure regeneration from hiermc result CSVs.

Three figure kinds: success-rate curves vs p/p* grouped by n with exact
binomial confidence bands, categorical regime maps over (I_g, I_c2) with
infeasible cells masked, and the hierarchy-vs-baseline sample-complexity
comparison. Rendering is a pure function of the CSV bytes and the figure
spec: fixed style, fixed dpi, no timestamps, and the spec hash stamped in
the corner, so the same inputs give byte-identical images.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.colors import ListedColormap

SUCCESS_CURVE = "success_curve"
REGIME_MAP = "regime_map"
BASELINE_COMPARISON = "baseline_comparison"

KINDS = (SUCCESS_CURVE, REGIME_MAP, BASELINE_COMPARISON)

REQUIRED_COLUMNS = {
    SUCCESS_CURVE: ["n", "ratio", "success_rate", "ci_lo", "ci_hi"],
    REGIME_MAP: ["i_g", "i_c2", "p_star", "regime", "feasible"],
    BASELINE_COMPARISON: ["i_g", "complexity_hier", "complexity_base"],
}

REGIME_ORDER = ["perfect", "grouping_limited", "clustering_limited"]
REGIME_COLORS = {
    "perfect": "#4c72b0",
    "grouping_limited": "#dd8452",
    "clustering_limited": "#55a868",
}

__all__ = ["FigureSpec", "RenderError", "render"]


class RenderError(ValueError):
    pass


@dataclass
class FigureSpec:
    kind: str
    input: list[str]
    out: str
    title: Optional[str] = None
    xlabel: Optional[str] = None
    ylabel: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RenderError(f"unknown figure kind: {self.kind!r}; expected one of {KINDS}")
        if isinstance(self.input, str):
            self.input = [self.input]
        if not self.input:
            raise RenderError("spec needs at least one input CSV")

    @staticmethod
    def from_json_file(path) -> "FigureSpec":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        try:
            return FigureSpec(**doc)
        except TypeError as exc:
            raise RenderError(f"bad figure spec {path}: {exc}") from exc

    def digest(self) -> str:
        blob = json.dumps(
            {"kind": self.kind, "input": self.input, "out": self.out,
             "title": self.title, "xlabel": self.xlabel, "ylabel": self.ylabel},
            sort_keys=True,
        ).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


def _read_rows(paths: list[str], kind: str) -> list[dict]:
    rows: list[dict] = []
    for path in paths:
        with open(path, "r", newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise RenderError(f"{path}: empty CSV")
            missing = [c for c in REQUIRED_COLUMNS[kind] if c not in reader.fieldnames]
            if missing:
                raise RenderError(f"{path}: missing columns {missing} for kind {kind}")
            rows.extend(reader)
    if not rows:
        raise RenderError(f"no data rows in {paths}")
    return rows


def _new_figure(spec: FigureSpec):
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    if spec.title:
        ax.set_title(spec.title)
    return fig, ax


def _finish(fig, ax, spec: FigureSpec, default_x: str, default_y: str):
    ax.set_xlabel(spec.xlabel or default_x)
    ax.set_ylabel(spec.ylabel or default_y)
    fig.text(0.995, 0.005, f"cfg {spec.digest()}", ha="right", va="bottom",
             fontsize=6, color="0.45")
    fig.tight_layout()
    fig.savefig(spec.out, dpi=150, metadata={"Software": "hiermc-plots"})
    plt.close(fig)


def _render_success_curve(spec: FigureSpec, rows: list[dict]) -> dict:
    by_n: dict[int, list[tuple[float, float, float, float]]] = {}
    for row in rows:
        by_n.setdefault(int(row["n"]), []).append(
            (float(row["ratio"]), float(row["success_rate"]),
             float(row["ci_lo"]), float(row["ci_hi"]))
        )
    fig, ax = _new_figure(spec)
    series = []
    for n in sorted(by_n):
        pts = sorted(by_n[n])
        ratio = [p[0] for p in pts]
        rate = [p[1] for p in pts]
        lo = [p[2] for p in pts]
        hi = [p[3] for p in pts]
        ax.plot(ratio, rate, marker="o", markersize=3.5, label=f"n = {n}")
        ax.fill_between(ratio, lo, hi, alpha=0.18)
        series.append({"n": n, "points": len(pts)})
    ax.axhline(0.5, color="0.6", linestyle=":", linewidth=0.9)
    ax.axvline(1.0, color="0.6", linestyle=":", linewidth=0.9)
    ax.set_ylim(-0.02, 1.02)
    ax.legend()
    _finish(fig, ax, spec, "p / p*", "empirical success rate")
    return {"kind": spec.kind, "rows": len(rows), "series": series}


def _render_regime_map(spec: FigureSpec, rows: list[dict]) -> dict:
    xs = sorted({float(r["i_g"]) for r in rows})
    ys = sorted({float(r["i_c2"]) for r in rows})
    x_idx = {v: i for i, v in enumerate(xs)}
    y_idx = {v: i for i, v in enumerate(ys)}
    codes = np.full((len(ys), len(xs)), -1, dtype=float)
    counts: dict[str, int] = {}
    for row in rows:
        regime = row["regime"]
        feasible = row["feasible"].strip().lower() == "true"
        key = regime if feasible else "infeasible"
        counts[key] = counts.get(key, 0) + 1
        j = y_idx[float(row["i_c2"])]
        i = x_idx[float(row["i_g"])]
        if feasible and regime in REGIME_ORDER:
            codes[j, i] = REGIME_ORDER.index(regime)
    masked = np.ma.masked_less(codes, 0)
    fig, ax = _new_figure(spec)
    cmap = ListedColormap([REGIME_COLORS[r] for r in REGIME_ORDER])
    cmap.set_bad("0.85")
    mesh = ax.pcolormesh(
        xs, ys, masked, cmap=cmap, vmin=-0.5, vmax=2.5, shading="nearest"
    )
    cbar = fig.colorbar(mesh, ticks=[0, 1, 2])
    cbar.ax.set_yticklabels(["perfect", "grouping-limited", "clustering-limited"])
    _finish(fig, ax, spec, "I_g", "I_c2")
    return {"kind": spec.kind, "rows": len(rows), "category_counts": counts}


def _render_baseline(spec: FigureSpec, rows: list[dict]) -> dict:
    pts = sorted((float(r["i_g"]), float(r["complexity_hier"]), float(r["complexity_base"]))
                 for r in rows)
    i_g = [p[0] for p in pts]
    hier = [p[1] for p in pts]
    base = [p[2] for p in pts]
    fig, ax = _new_figure(spec)
    ax.plot(i_g, base, label="flat model (g*c independent communities)", color="#c44e52")
    ax.plot(i_g, hier, label="hierarchical model", color="#4c72b0")
    ax.legend()
    _finish(fig, ax, spec, "I_g", "optimal sample complexity  n m p*")
    return {"kind": spec.kind, "rows": len(rows),
            "pointwise_leq": all(h <= b + 1e-9 for h, b in zip(hier, base))}


def render(spec: FigureSpec) -> dict:
    """Render one figure; returns a summary of what was drawn.

    Raises RenderError (and writes nothing) on empty inputs or missing
    columns.
    """
    rows = _read_rows(spec.input, spec.kind)
    out_dir = os.path.dirname(os.path.abspath(spec.out))
    if out_dir and not os.path.isdir(out_dir):
        raise RenderError(f"output directory does not exist: {out_dir}")
    if spec.kind == SUCCESS_CURVE:
        return _render_success_curve(spec, rows)
    if spec.kind == REGIME_MAP:
        return _render_regime_map(spec, rows)
    return _render_baseline(spec, rows)
