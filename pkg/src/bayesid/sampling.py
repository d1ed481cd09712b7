"""Seeded samplers for the general-truncated-normal and inverse-Gamma laws."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, PCG64, SeedSequence
from scipy.special import erfc, log_ndtr

# Below this normalizer the truncated density is treated as a point mass at the
# boundary nearest the parent mean.
DEGENERATE_MASS = 1e-300

_SQRT2 = math.sqrt(2.0)
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_MAX_REJECTION_ROUNDS = 10_000


class DegenerateNormalizerError(FloatingPointError):
    """The truncation interval carries (numerically) zero parent-normal mass."""


def rng_stream(seed: int, stream: int = 0) -> Generator:
    """Return an independent PCG64 generator for ``(seed, stream)``.

    Streams with different ``stream`` ids are derived through ``SeedSequence``
    spawn keys, so they never share state even for the same seed.
    """
    if not 0 <= int(seed) < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    if stream < 0:
        raise ValueError("stream id must be nonnegative")
    return Generator(PCG64(SeedSequence(int(seed), spawn_key=(int(stream),))))


@dataclass(frozen=True)
class GtnParams:
    mu: float
    tau: float
    a: float = -1.0
    b: float = 1.0

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"need a < b, got a={self.a}, b={self.b}")
        if not self.tau > 0:
            raise ValueError(f"parent precision must be positive, got {self.tau}")


def std_normal_cdf(x):
    """Standard normal CDF through ``erfc`` (accurate in both tails)."""
    out = 0.5 * erfc(-np.asarray(x, dtype=float) / _SQRT2)
    return float(out) if np.ndim(out) == 0 else out


def _upper_tail(x):
    return 0.5 * erfc(np.asarray(x, dtype=float) / _SQRT2)


def standardized_mass(alpha, beta):
    """``Phi(beta) - Phi(alpha)`` evaluated on the tail that keeps precision."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    upper = _upper_tail(alpha) - _upper_tail(beta)
    lower = std_normal_cdf(beta) - std_normal_cdf(alpha)
    return np.where(alpha > 0, upper, lower)


def log_standardized_mass(alpha, beta):
    """``log(Phi(beta) - Phi(alpha))`` without underflow in either tail."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    flip = alpha > 0
    lo = np.where(flip, -beta, alpha)
    hi = np.where(flip, -alpha, beta)
    log_hi = log_ndtr(hi)
    with np.errstate(divide="ignore"):
        return log_hi + np.log1p(-np.exp(log_ndtr(lo) - log_hi))


def gtn_log_density(x: float, p: GtnParams) -> float:
    if x < p.a or x > p.b:
        return -math.inf
    s = math.sqrt(p.tau)
    z = float(standardized_mass((p.a - p.mu) * s, (p.b - p.mu) * s))
    if z < DEGENERATE_MASS:
        raise DegenerateNormalizerError(
            f"normalizer {z:.3g} underflows for mu={p.mu}, tau={p.tau}, [{p.a}, {p.b}]"
        )
    return 0.5 * math.log(p.tau / (2 * math.pi)) - 0.5 * p.tau * (x - p.mu) ** 2 - math.log(z)


def _sample_std_truncated(alpha: np.ndarray, beta: np.ndarray, rng: Generator) -> np.ndarray:
    """Draw z ~ N(0, 1) restricted to [alpha, beta], elementwise.

    Regions containing zero use normal or uniform proposals; one-sided regions
    use Robert's exponential proposal (uniform when the interval is narrow).
    Negative regions are mirrored onto the positive axis.
    """
    flip = beta <= 0
    lo = np.where(flip, -beta, alpha)
    hi = np.where(flip, -alpha, beta)

    straddle = lo < 0
    width = hi - lo
    lam = 0.5 * (lo + np.sqrt(lo * lo + 4.0))
    with np.errstate(over="ignore", invalid="ignore"):
        exp_cut = lo + (2.0 / (lo + np.sqrt(lo * lo + 4.0))) * np.exp(
            0.25 * (lo * lo - lo * np.sqrt(lo * lo + 4.0)) + 0.5
        )
    # 0: normal proposal, 1: uniform proposal with straddle weight,
    # 2: exponential tail proposal, 3: uniform proposal with tail weight
    method = np.where(
        straddle,
        np.where(width >= _SQRT_2PI, 0, 1),
        np.where(hi > exp_cut, 2, 3),
    )

    out = np.empty(lo.shape)
    pending = np.arange(lo.size)
    lo_f, hi_f, lam_f, meth_f = lo.ravel(), hi.ravel(), lam.ravel(), method.ravel()
    out_f = out.reshape(-1)
    for _ in range(_MAX_REJECTION_ROUNDS):
        if pending.size == 0:
            break
        l, h, lm, m = lo_f[pending], hi_f[pending], lam_f[pending], meth_f[pending]
        n = pending.size
        u = rng.random(n)
        z = np.empty(n)
        accept = np.empty(n, dtype=bool)

        sel = m == 0
        if sel.any():
            zn = rng.standard_normal(int(sel.sum()))
            z[sel] = zn
            accept[sel] = (zn >= l[sel]) & (zn <= h[sel])
        sel = m == 1
        if sel.any():
            zu = l[sel] + (h[sel] - l[sel]) * rng.random(int(sel.sum()))
            z[sel] = zu
            accept[sel] = u[sel] <= np.exp(-0.5 * zu * zu)
        sel = m == 2
        if sel.any():
            ze = l[sel] + rng.exponential(size=int(sel.sum())) / lm[sel]
            z[sel] = ze
            accept[sel] = (ze <= h[sel]) & (u[sel] <= np.exp(-0.5 * (ze - lm[sel]) ** 2))
        sel = m == 3
        if sel.any():
            zu = l[sel] + (h[sel] - l[sel]) * rng.random(int(sel.sum()))
            z[sel] = zu
            accept[sel] = u[sel] <= np.exp(0.5 * (l[sel] ** 2 - zu * zu))

        out_f[pending[accept]] = z[accept]
        pending = pending[~accept]
    else:  # pragma: no cover - acceptance rates are bounded away from zero
        raise RuntimeError("truncated normal rejection sampler did not terminate")

    return np.where(flip, -out, out)


def sample_gtn_array(mu, tau, a, b, rng: Generator) -> np.ndarray:
    """Vectorized GTN draws; arguments broadcast against each other.

    Entries whose normalizer underflows below ``DEGENERATE_MASS`` return the
    bound nearest ``mu`` without consuming randomness.
    """
    mu, tau, a, b = np.broadcast_arrays(
        np.asarray(mu, float), np.asarray(tau, float), np.asarray(a, float), np.asarray(b, float)
    )
    s = np.sqrt(tau)
    alpha = (a - mu) * s
    beta = (b - mu) * s
    degenerate = standardized_mass(alpha, beta) < DEGENERATE_MASS

    out = np.where(mu >= b, b, a).astype(float)
    live = ~degenerate
    if live.any():
        z = _sample_std_truncated(alpha[live], beta[live], rng)
        out[live] = np.clip(mu[live] + z / s[live], a[live], b[live])
    return out


def sample_gtn(p: GtnParams, rng: Generator, size=None):
    """Draw from GTN(mu, 1/tau, a, b); a scalar when ``size`` is None."""
    shape = () if size is None else size
    out = sample_gtn_array(np.full(shape, p.mu), p.tau, p.a, p.b, rng)
    return float(out) if size is None else out


def sample_inverse_gamma(alpha: float, beta: float, rng: Generator, size=None):
    """Draw from the inverse-Gamma law with shape ``alpha`` and scale ``beta``."""
    if not (alpha > 0 and beta > 0):
        raise ValueError(f"inverse-Gamma parameters must be positive, got ({alpha}, {beta})")
    g = rng.gamma(alpha, 1.0, size=size)
    # shape << 1 can round a gamma draw to zero
    g = np.maximum(g, np.finfo(float).tiny)
    out = beta / g
    return float(out) if size is None else out
