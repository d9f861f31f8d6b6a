"""Command line entry: render --csv PATH --kind KIND --out PATH."""

from __future__ import annotations

import argparse
import sys

from .contract import ContractError, EmptyData, SchemaMismatch
from .figures import PLOT_KINDS, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render", description="Render figures from detfield CSV artifacts")
    parser.add_argument("--csv", required=True, help="input contract CSV")
    parser.add_argument("--kind", required=True, choices=PLOT_KINDS)
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)
    try:
        info = render(args.csv, args.kind, args.out)
    except SchemaMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EmptyData as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ContractError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {info.out_path} ({info.kind}, {info.n_rows} rows)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
