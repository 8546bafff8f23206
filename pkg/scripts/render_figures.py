#!/usr/bin/env python3
"""Render every figure for which a result CSV exists under --out-dir.

Runs after run_fig4_sweeps.py and make_threshold_maps.py; needs the
hiermc-plots package installed (see plots/).
"""

import argparse
import json
import subprocess
import sys
from pathlib import Path

FIGURES = [
    ("fig4a_sweep.csv", "success_curve", "fig4a.png", "Success rate vs p/p* (alpha = 40)"),
    ("fig4b_sweep.csv", "success_curve", "fig4b.png", "Success rate vs p/p* (alpha = 17)"),
    ("fig1_grid.csv", "regime_map", "fig1.png", "Regimes, tau1 = 1/3 > tau2 = 1/6"),
    ("fig2_grid.csv", "regime_map", "fig2.png", "Regimes, tau1 = 1/6 < tau2 = 1/3"),
    ("fig3_baseline.csv", "baseline_comparison", "fig3.png", "Hierarchy vs flat baseline"),
]


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out-dir", default="results")
    args = parser.parse_args()
    out_dir = Path(args.out_dir)
    rendered = 0
    for csv_name, kind, image, title in FIGURES:
        csv_path = out_dir / csv_name
        if not csv_path.exists():
            print(f"skip {csv_name}: not found")
            continue
        spec = {
            "kind": kind,
            "input": str(csv_path),
            "out": str(out_dir / image),
            "title": title,
        }
        spec_path = out_dir / f".{image}.spec.json"
        spec_path.write_text(json.dumps(spec))
        proc = subprocess.run(
            [sys.executable, "-m", "hiermc_plots.cli", "render", "--spec", str(spec_path)]
        )
        if proc.returncode != 0:
            return proc.returncode
        rendered += 1
    print(f"rendered {rendered} figures in {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
