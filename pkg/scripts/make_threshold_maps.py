#!/usr/bin/env python3
"""Emit the regime-map grids and the baseline-comparison curve as CSVs.

Usage: python scripts/make_threshold_maps.py [--out-dir results]
"""

import argparse
import json
import sys
from pathlib import Path

from hiermc.modelgen import DeltaPair, ModelParams
from hiermc.threshold import (
    baseline_comparison,
    regime_grid,
    write_baseline_csv,
    write_regime_grid_csv,
)

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out-dir", default="results")
    args = parser.parse_args()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for preset, writer in (("fig1_grid", "grid"), ("fig2_grid", "grid"), ("fig3_baseline", "baseline")):
        cfg = json.loads((ROOT / "configs" / f"{preset}.json").read_text())
        params = ModelParams(p=0.0, **cfg["params"])
        delta = DeltaPair(cfg["delta"]["tau1"], cfg["delta"]["tau2"])
        out = out_dir / f"{preset}.csv"
        if writer == "grid":
            spec = cfg["grid"]
            cells = regime_grid(
                params, delta, tuple(spec["i_g_range"]), tuple(spec["i_c2_range"]),
                spec["resolution"], spec.get("gamma", 1.0),
            )
            write_regime_grid_csv(cells, out)
            print(f"[{preset}] {len(cells)} cells -> {out}")
        else:
            spec = cfg["baseline"]
            points = baseline_comparison(
                params, delta, tuple(spec["i_g_range"]), spec["npoints"]
            )
            write_baseline_csv(points, out)
            print(f"[{preset}] {len(points)} points -> {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
