#!/usr/bin/env python3
"""Run the whole pipeline on the bundled synthetic-country config.

Stages: build-dataset -> test-univariate -> learn-tree -> eval-hypotheses
-> train-suite -> riskmap, all into one output directory.

Usage:
    python scripts/run_synthetic_pipeline.py [--out-dir out/demo] [--seed 7]
"""

import argparse
import sys
from pathlib import Path

from pcrisk.cli import main as pcrisk_main

REPO = Path(__file__).resolve().parent.parent
DEFAULT_CONFIG = REPO / "configs" / "synthetic_demo.json"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(DEFAULT_CONFIG))
    ap.add_argument("--out-dir", default="out/demo")
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args()

    common = ["--config", args.config, "--out-dir", args.out_dir]
    if args.seed is not None:
        common += ["--seed", str(args.seed)]

    stages = [
        ["build-dataset"],
        ["test-univariate"],
        ["learn-tree"],
        ["eval-hypotheses", "--which", "tree"],
        ["train-suite"],
        ["riskmap"],
    ]
    for stage in stages:
        print(f"\n=== pcrisk {' '.join(stage)} ===")
        code = pcrisk_main(stage + common)
        if code != 0:
            print(f"stage {stage[0]} failed with exit code {code}", file=sys.stderr)
            return code
    print(f"\nall stages complete; artifacts in {args.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
