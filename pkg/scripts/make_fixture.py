"""Generate the bundled synthetic market fixture under data/fixture/.

Each asset gets an alpha matrix (30 alphas x 160 dates) built from a few
latent signals, and a price file with one extra leading date so every alpha
date has a return.  One latent signal leads the next-day return, so alphas
loading on it carry positive RankIC.
"""
from __future__ import annotations

import argparse
import datetime as dt
from pathlib import Path

import numpy as np

from bayesid.core import DataMatrix
from bayesid.io import write_csv, write_matrix

N_ALPHAS = 30
N_DAYS = 160
N_LATENT = 4


def make_asset(seed: int):
    g = np.random.default_rng(seed)
    latent = g.standard_normal((N_LATENT, N_DAYS + 1))
    # returns on dates 1..N_DAYS; the first latent signal leads them by a day
    ret = 0.006 * latent[0, :-1] + 0.008 * g.standard_normal(N_DAYS)
    loadings = g.uniform(-1, 1, (N_ALPHAS, N_LATENT))
    alphas = loadings @ latent[:, 1:] + 0.3 * g.standard_normal((N_ALPHAS, N_DAYS))
    # prices with (p_t - p_{t-1}) / p_t = ret_t
    closes = [100.0]
    for r in ret:
        closes.append(closes[-1] / (1.0 - r))
    return alphas, np.array(closes)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "data" / "fixture"))
    ap.add_argument("--assets", type=int, default=2)
    args = ap.parse_args(argv)
    start = dt.date(2021, 1, 4)
    dates = [(start + dt.timedelta(days=i)).isoformat() for i in range(N_DAYS + 1)]
    for k in range(args.assets):
        alphas, closes = make_asset(1000 + k)
        name = f"asset{k + 1}"
        A = DataMatrix(alphas, [f"alpha{j:03d}" for j in range(N_ALPHAS)], dates[1:])
        write_matrix(Path(args.out) / f"{name}_alphas.csv", A)
        write_csv(Path(args.out) / f"{name}_prices.csv", ["date", "close"], zip(dates, closes))


if __name__ == "__main__":
    main()
