"""Return series, rank correlation and alpha diagnostics."""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

PAPER = "paper"
CONVENTIONAL = "conventional"


class DegenerateWarning(RuntimeWarning):
    """A statistic fell back to its documented value on constant input."""


@dataclass
class PriceSeries:
    dates: list[str]
    closes: np.ndarray

    def __post_init__(self):
        self.closes = np.asarray(self.closes, dtype=float)
        if len(self.dates) != self.closes.size:
            raise ValueError("dates and closes differ in length")
        if np.any(~np.isfinite(self.closes)) or np.any(self.closes <= 0):
            bad = int(np.flatnonzero(~(self.closes > 0))[0])
            raise ValueError(f"nonpositive close on {self.dates[bad]}")
        for prev, cur in zip(self.dates, self.dates[1:]):
            if not cur > prev:
                raise ValueError(f"dates must be strictly increasing: {prev!r} then {cur!r}")


def returns(prices, convention: str = PAPER) -> np.ndarray:
    """Daily returns aligned to dates 2..T.

    The default divides by the current close, ``(p_t - p_{t-1}) / p_t``;
    ``convention="conventional"`` divides by ``p_{t-1}``.
    """
    p = np.asarray(getattr(prices, "closes", prices), dtype=float)
    if p.size < 2:
        raise ValueError("need at least two prices")
    if np.any(p <= 0):
        raise ValueError("prices must be positive")
    diff = np.diff(p)
    if convention == PAPER:
        return diff / p[1:]
    if convention == CONVENTIONAL:
        return diff / p[:-1]
    raise ValueError(f"unknown return convention {convention!r}")


def shifted_return(ret, h: int = 1) -> np.ndarray:
    """``out[i] = ret[i + h]``; the last ``h`` positions have no partner."""
    ret = np.asarray(ret, dtype=float)
    if h < 1:
        raise ValueError("holding period must be >= 1")
    if ret.size <= h:
        raise ValueError(f"series of length {ret.size} too short for holding period {h}")
    return ret[h:].copy()


def _pearson(x: np.ndarray, y: np.ndarray) -> tuple[float, bool]:
    xc = x - x.mean()
    yc = y - y.mean()
    den = np.sqrt(np.dot(xc, xc) * np.dot(yc, yc))
    if den == 0.0:
        return 0.0, True
    return float(np.clip(np.dot(xc, yc) / den, -1.0, 1.0)), False


def spearman(x, y) -> float:
    """Pearson correlation of average ranks; 0.0 when either side is constant."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValueError("spearman needs two equal-length sequences of length >= 2")
    rho, degenerate = _pearson(rankdata(x), rankdata(y))
    if degenerate:
        warnings.warn("zero rank variance; spearman set to 0", DegenerateWarning, stacklevel=2)
    return rho


def rank_ic(alpha, ret, h: int = 1) -> float:
    """Spearman correlation of an alpha with the ``h``-day forward return.

    ``alpha[t]`` and ``ret[t]`` share a date; the alpha is truncated to the
    overlap with ``shifted_return(ret, h)``.
    """
    alpha = np.asarray(alpha, dtype=float)
    ret = np.asarray(ret, dtype=float)
    if alpha.size != ret.size:
        raise ValueError(f"alpha length {alpha.size} is not aligned with {ret.size} returns")
    fwd = shifted_return(ret, h)
    if fwd.size < 2:
        raise ValueError("insufficient overlap for RankIC")
    return spearman(alpha[: fwd.size], fwd)


def mean_pairwise_correlation(rows) -> float:
    """Mean absolute Pearson correlation over unordered row pairs."""
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[0] < 2:
        raise ValueError("need at least two equal-length rows")
    vals = []
    degenerate = False
    for i, j in itertools.combinations(range(rows.shape[0]), 2):
        rho, deg = _pearson(rows[i], rows[j])
        degenerate |= deg
        vals.append(abs(rho))
    if degenerate:
        warnings.warn("constant row; its pairs contribute 0", DegenerateWarning, stacklevel=2)
    return float(np.mean(vals))
