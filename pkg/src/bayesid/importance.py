"""Column importance and the intervened prior odds of a basis swap."""
from __future__ import annotations

import math

import numpy as np
from scipy.special import expit

from .metrics import rank_ic

EPS = 1e-9


def squash(raw, scale: float = 1.0) -> np.ndarray:
    """Sigmoid of ``scale * raw``, clamped to ``[EPS, 1 - EPS]``."""
    raw = np.asarray(raw, dtype=float)
    if not np.all(np.isfinite(raw)):
        raise ValueError("raw importance must be finite; clamp infinities before squashing")
    return np.clip(expit(scale * raw), EPS, 1.0 - EPS)


def _logit(p: float) -> float:
    return math.log(p) - math.log1p(-p)


def log_prior_odds(p, j: int, i: int) -> float:
    """Log of ``(1 - p_j) / p_j * p_i / (1 - p_i)``.

    Equal importances give exactly 0.0, so a uniform vector leaves the swap
    odds bit-for-bit unchanged.
    """
    if j == i:
        raise ValueError("swap needs two distinct columns")
    return _logit(float(p[i])) - _logit(float(p[j]))


def prior_odds(p, j: int, i: int) -> float:
    """Prior odds of moving the basis from column ``j`` to column ``i``."""
    return math.exp(log_prior_odds(p, j, i))


def uniform_importance(n: int) -> np.ndarray:
    return np.full(n, 0.5)


def rankic_importance(alphas, ret, h: int = 1) -> np.ndarray:
    """Raw importance: RankIC of every alpha row against ``h``-day forward returns.

    ``alphas`` rows must be aligned to the dates of ``ret``.
    """
    alphas = np.atleast_2d(np.asarray(getattr(alphas, "values", alphas), dtype=float))
    return np.array([rank_ic(row, ret, h) for row in alphas])
