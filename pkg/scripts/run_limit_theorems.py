#!/usr/bin/env python3
"""Drive the three remaining limit-law experiments: white-noise scaling for
the tent symbol, the thin-interval power law, and the two-interval bounded
variance limit."""

import argparse
import sys
from pathlib import Path

from detfield.cli import main as detfield_main

HERE = Path(__file__).resolve().parent
CONFIGS = HERE.parent / "configs"

JOBS = (
    ("theorem2-run", "triangle_white_noise.conf", "white_noise"),
    ("variance-scan", "beta_union_power_law.conf", "power_law_growth"),
    ("m-scan", "beta_union_power_law.conf", "power_law_density"),
    ("clt-run", "two_interval_limit.conf", "two_interval"),
)


def run(out_dir: Path, workers: int) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    for subcommand, config, name in JOBS:
        code = detfield_main([subcommand, "--config", str(CONFIGS / config),
                              "--out", str(out_dir / name),
                              "--workers", str(workers)])
        if code != 0:
            print(f"{name} failed with exit code {code}", file=sys.stderr)
            return code
    return 0


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/limits")
    parser.add_argument("--workers", type=int, default=4)
    args = parser.parse_args()
    sys.exit(run(Path(args.out), args.workers))
