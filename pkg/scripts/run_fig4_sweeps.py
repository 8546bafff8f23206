#!/usr/bin/env python3
"""Run both shipped phase-transition sweeps and write the result CSVs.

Usage: python scripts/run_fig4_sweeps.py [--out-dir results] [--workers N]
Sweeps resume: re-running skips completed points.
"""

import argparse
import json
import sys
from pathlib import Path

from hiermc.experiments import SweepConfig, sweep

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out-dir", default="results")
    parser.add_argument("--workers", type=int, default=2)
    args = parser.parse_args()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for preset in ("fig4a", "fig4b"):
        cfg = json.loads((ROOT / "configs" / f"{preset}.json").read_text())
        section = dict(cfg["sweep"])
        section["base_params"] = {
            k: v for k, v in cfg["params"].items() if k not in ("n", "m", "p")
        }
        section["workers"] = args.workers
        out = out_dir / f"{preset}_sweep.csv"
        print(f"[{preset}] sweeping -> {out}")
        rows = sweep(SweepConfig.from_dict(section), out)
        print(f"[{preset}] {len(rows)} new points")
    return 0


if __name__ == "__main__":
    sys.exit(main())
