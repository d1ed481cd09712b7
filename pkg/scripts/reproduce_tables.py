"""Regenerate the MSE table and the selection/backtest table from a data directory.

Expects ``<name>_alphas.csv`` and ``<name>_prices.csv`` pairs in ``--data``
(the bundled synthetic fixture by default).  Real-market numbers need the
user's own price history and alpha library in the same format.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from bayesid.cli import main as cli_main


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", default=str(Path(__file__).resolve().parents[1] / "data" / "fixture"))
    ap.add_argument("--d-in", type=int, required=True, help="in-sample days")
    ap.add_argument("--output-dir", default="runs/tables")
    # anything not recognised here is forwarded to the tables command
    args, extra = ap.parse_known_args(argv)
    pairs = []
    for alphas in sorted(Path(args.data).glob("*_alphas.csv")):
        prices = alphas.with_name(alphas.name.replace("_alphas.csv", "_prices.csv"))
        if not prices.exists():
            print(f"no price file for {alphas.name}", file=sys.stderr)
            return 1
        pairs += ["--alphas", str(alphas), "--prices", str(prices)]
    if not pairs:
        print(f"no *_alphas.csv files in {args.data}", file=sys.stderr)
        return 1
    return cli_main(["tables", *pairs, "--d-in", str(args.d_in), "--output-dir", args.output_dir, *extra])


if __name__ == "__main__":
    sys.exit(main())
