#!/usr/bin/env python3
"""Counting-statistic scaling study: log variance growth plus normality
diagnostics, rendered to figures when reportplots is installed."""

import argparse
import shutil
import subprocess
import sys
from pathlib import Path

from detfield.cli import main as detfield_main

HERE = Path(__file__).resolve().parent
CONFIG = HERE.parent / "configs" / "sine_counting.conf"


def run(out_dir: Path, workers: int) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    for sub in ("clt-run", "variance-scan", "m-scan"):
        code = detfield_main([sub, "--config", str(CONFIG),
                              "--out", str(out_dir / sub.replace("-", "_")),
                              "--workers", str(workers)])
        if code != 0:
            return code
    if shutil.which("render"):
        pairs = [
            (out_dir / "clt_run" / "clt_run_samples.csv", "histogram"),
            (out_dir / "clt_run" / "clt_run_samples.csv", "qq"),
            (out_dir / "variance_scan" / "variance_scan.csv", "growth"),
            (out_dir / "m_scan" / "m_scan.csv", "m_curve"),
        ]
        for csv_path, kind in pairs:
            subprocess.run(["render", "--csv", str(csv_path), "--kind", kind,
                            "--out", str(out_dir / f"{kind}.png")], check=True)
    return 0


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/counting")
    parser.add_argument("--workers", type=int, default=0)
    args = parser.parse_args()
    sys.exit(run(Path(args.out), args.workers))
