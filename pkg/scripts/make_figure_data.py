#!/usr/bin/env python3
"""Regenerate the CSV inputs behind the four reference figures.

Runs the CLI end to end with the bundled configs: density comparisons for
the double-exponential and variance gamma models (the figure-1/figure-3
layouts) and Monte Carlo vs asymptotic smiles for both (figures 2 and 4).
Desk-scale path counts by default; pass --paths to override.

    python scripts/make_figure_data.py --out-dir out [--paths 100000]
"""

import argparse
import pathlib
import subprocess
import sys

HERE = pathlib.Path(__file__).resolve().parent
CONFIGS = HERE / "configs"

JOBS = [
    ("density", "kou_density.json", "density_kou.csv", []),
    ("density", "vg_density.json", "density_vg.csv", []),
    ("smile", "kou_smile.json", "smile_kou.csv", []),
    ("smile", "vg_smile.json", "smile_vg.csv", []),
    ("price", "kou_price.json", "price_kou.csv", []),
    ("diagnose", "diagnose.json", "diagnose_kou.csv", []),
]


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default="out")
    ap.add_argument("--paths", type=int, default=None,
                    help="override the Monte Carlo path count for the smiles")
    args = ap.parse_args()
    out_dir = pathlib.Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    for command, config, out_name, extra in JOBS:
        cmd = [sys.executable, "-m", "letf.cli", command,
               "--config", str(CONFIGS / config),
               "--out", str(out_dir / out_name), *extra]
        if command == "smile" and args.paths:
            cmd += ["--paths", str(args.paths)]
        print("+", " ".join(cmd), flush=True)
        result = subprocess.run(cmd)
        if result.returncode not in (0, 3):
            print(f"failed with exit code {result.returncode}", file=sys.stderr)
            return result.returncode
    print(f"wrote {len(JOBS)} files to {out_dir}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
