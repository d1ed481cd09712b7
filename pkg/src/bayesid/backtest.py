"""Alpha selection backtest: IS/OS split, per-alpha OLS, long/flat signals, and
an equal-weight long-only portfolio.

Date alignment used throughout: ``alphas[:, d]`` and ``ret[d]`` share date
``d``; the target for day ``d`` is ``ret[d + h]``.  A period only trades days
whose target is realized inside the same period, so in-sample fits and
in-sample performance never read an out-of-sample price.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .metrics import DegenerateWarning

TRADING_DAYS = 252


@dataclass(frozen=True)
class SampleSplit:
    D_in: int
    D: int

    def __post_init__(self):
        if not 0 < self.D_in < self.D:
            raise ValueError(f"need 0 < D_in < D, got D_in={self.D_in}, D={self.D}")


@dataclass(frozen=True)
class OlsFit:
    w: float
    b: float
    alpha_index: int | str = 0
    degenerate: bool = False


@dataclass
class PortfolioSeries:
    values: np.ndarray
    daily_returns: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.daily_returns = np.asarray(self.daily_returns, dtype=float)
        if self.values.size != self.daily_returns.size + 1 or self.values[0] != 1.0:
            raise ValueError("values must start at 1.0 and have one more entry than daily_returns")


@dataclass(frozen=True)
class PerfMetrics:
    sharpe: float
    annual_return: float
    max_drawdown: float
    degenerate: bool = False


def split(A, s: SampleSplit) -> tuple[np.ndarray, np.ndarray]:
    """Column-contiguous partition of an N x D alpha matrix at ``D_in``."""
    a = np.asarray(getattr(A, "values", A), dtype=float)
    if a.ndim != 2 or a.shape[1] != s.D:
        raise ValueError(f"matrix has {a.shape[-1]} columns, split expects D={s.D}")
    return a[:, : s.D_in].copy(), a[:, s.D_in :].copy()


def ols_fit(alpha, target, alpha_index: int | str = 0) -> OlsFit:
    """Least-squares line ``target ~ w * alpha + b``."""
    x = np.asarray(alpha, dtype=float)
    y = np.asarray(target, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValueError("ols_fit needs two aligned sequences of length >= 2")
    xc = x - x.mean()
    var = float(xc @ xc)
    if var == 0.0:
        warnings.warn("constant alpha; slope set to 0", DegenerateWarning, stacklevel=2)
        return OlsFit(w=0.0, b=float(y.mean()), alpha_index=alpha_index, degenerate=True)
    w = float(xc @ (y - y.mean())) / var
    return OlsFit(w=w, b=float(y.mean() - w * x.mean()), alpha_index=alpha_index)


def predict(day_alphas, fits) -> float:
    day_alphas = np.asarray(day_alphas, dtype=float)
    if day_alphas.shape != (len(fits),):
        raise ValueError("one alpha value per fit is required")
    return float(sum(a * f.w + f.b for a, f in zip(day_alphas, fits)))


def daily_signal(day_alphas, fits) -> bool:
    """True (long) iff the summed prediction is strictly positive."""
    return predict(day_alphas, fits) > 0.0


def simulate(signals, realized) -> PortfolioSeries:
    """Equal-weight long-only portfolio over an assets x days grid.

    Day ``t`` earns the mean realized return of the assets signalled long, or
    0 when none is.
    """
    sig = np.asarray(signals, dtype=bool)
    ret = np.asarray(realized, dtype=float)
    if sig.ndim == 1:
        sig, ret = sig[None, :], np.atleast_2d(ret)
    if sig.shape != ret.shape:
        raise ValueError(f"signal grid {sig.shape} and return grid {ret.shape} are misaligned")
    n_long = sig.sum(axis=0)
    gross = np.where(sig, ret, 0.0).sum(axis=0)
    daily = np.divide(gross, n_long, out=np.zeros(sig.shape[1]), where=n_long > 0)
    values = np.concatenate([[1.0], np.cumprod(1.0 + daily)])
    return PortfolioSeries(values=values, daily_returns=daily)


def max_drawdown(values) -> float:
    v = np.asarray(values, dtype=float)
    peak = np.maximum.accumulate(v)
    return float(np.clip(np.max((peak - v) / peak), 0.0, 1.0))


def perf_metrics(p: PortfolioSeries) -> PerfMetrics:
    r = p.daily_returns
    if p.values.size < 2:
        raise ValueError("need at least two portfolio values")
    mean = float(np.mean(r))
    sd = float(np.std(r, ddof=1)) if r.size > 1 else 0.0
    degenerate = sd <= 1e-12 * abs(mean) or sd == 0.0
    if degenerate:
        warnings.warn("zero-volatility returns; Sharpe set to 0", DegenerateWarning, stacklevel=2)
        sharpe = 0.0
    else:
        sharpe = mean / sd * math.sqrt(TRADING_DAYS)
    return PerfMetrics(
        sharpe=sharpe,
        annual_return=mean * TRADING_DAYS,
        max_drawdown=max_drawdown(p.values),
        degenerate=degenerate,
    )


def fit_period(alphas: np.ndarray, ret: np.ndarray, selected, h: int) -> list[OlsFit]:
    """OLS per selected alpha on one period; day ``d`` is paired with ``ret[d + h]``."""
    days = alphas.shape[1]
    if days <= h + 1:
        raise ValueError(f"period of {days} days is too short for holding period {h}")
    return [ols_fit(alphas[m, : days - h], ret[h:days], alpha_index=int(m)) for m in selected]


def period_signals(alphas: np.ndarray, fits: list[OlsFit], h: int) -> np.ndarray:
    """Long/flat per tradeable day of one period (the last ``h`` days have no target)."""
    idx = [f.alpha_index for f in fits]
    days = alphas.shape[1] - h
    return np.array([daily_signal(alphas[idx, d], fits) for d in range(days)], dtype=bool)


@dataclass
class AssetRun:
    name: str
    selected: np.ndarray
    fits: list[OlsFit]
    is_signals: np.ndarray
    os_signals: np.ndarray
    is_realized: np.ndarray
    os_realized: np.ndarray
    meta: dict = field(default_factory=dict)


def run_asset(name: str, alphas, ret, s: SampleSplit, selected, h: int = 1) -> AssetRun:
    """Fit on the in-sample block only and emit signals for both periods.

    ``alphas`` is N x D; ``ret`` holds the D returns sharing the alpha dates.
    """
    a = np.asarray(getattr(alphas, "values", alphas), dtype=float)
    ret = np.asarray(ret, dtype=float)
    if ret.shape != (s.D,):
        raise ValueError(f"{name}: expected {s.D} aligned returns, got {ret.size}")
    a_in, a_out = split(a, s)
    r_in, r_out = ret[: s.D_in], ret[s.D_in :]
    selected = np.asarray(selected, dtype=int)
    fits = fit_period(a_in, r_in, selected, h)
    if r_out.size <= h:
        raise ValueError(f"{name}: out-of-sample period too short for holding period {h}")
    return AssetRun(
        name=name,
        selected=selected,
        fits=fits,
        is_signals=period_signals(a_in, fits, h),
        os_signals=period_signals(a_out, fits, h),
        is_realized=r_in[h:],
        os_realized=r_out[h:],
    )


def combine(runs: list[AssetRun], period: str) -> PortfolioSeries:
    """Equal-weight portfolio across assets for ``period`` in {"is", "os"}."""
    if period not in ("is", "os"):
        raise ValueError("period must be 'is' or 'os'")
    sig = np.array([getattr(r, f"{period}_signals") for r in runs])
    ret = np.array([getattr(r, f"{period}_realized") for r in runs])
    return simulate(sig, ret)
