"""Gibbs sampler for Bayesian interpolative decomposition (GBT and IID modes).

Each iteration follows the same order: basis swap(s), refresh of ``X``, a
draw of the noise variance, then a sweep over every entry of ``Y``.  Entries
of one row of ``Y`` are conditionally independent given everything else (the
likelihood factorizes over columns of ``A``), so a row is drawn in one
vectorized call; this is the same conditional law as the entry-by-entry sweep.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator

from .core import DataMatrix, Hyperparams, basis_indices, check_state, derive_x
from .importance import log_prior_odds
from .sampling import log_standardized_mass, rng_stream, sample_gtn_array, sample_inverse_gamma

GBT = "gbt"
IID = "iid"
FIXED = "fixed"
COLLAPSED = "collapsed"


@dataclass
class ChainConfig:
    K: int
    iterations: int = 1000
    burn_in: int = 100
    thinning: int = 5
    seed: int = 0
    mode: str = GBT
    swaps_per_sweep: int = 1
    swap_move: str = FIXED
    refresh_every: int = 50
    n_monitor: int = 50
    early_stop: bool = False
    early_stop_tol: float = 1e-6

    def __post_init__(self):
        if self.mode not in (GBT, IID):
            raise ValueError(f"mode must be {GBT!r} or {IID!r}, got {self.mode!r}")
        if self.swap_move not in (FIXED, COLLAPSED):
            raise ValueError(f"swap_move must be {FIXED!r} or {COLLAPSED!r}, got {self.swap_move!r}")
        if self.iterations < 1 or self.thinning < 1 or self.swaps_per_sweep < 1:
            raise ValueError("iterations, thinning and swaps_per_sweep must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("need 0 <= burn_in < iterations")
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.refresh_every < 1:
            raise ValueError("refresh_every must be positive")

    def validate_for(self, n: int):
        if self.K > n:
            raise ValueError(f"K={self.K} exceeds the column count {n}")


@dataclass
class ChainState:
    Y: np.ndarray
    r: np.ndarray
    sigma2: float
    X: np.ndarray
    residual: np.ndarray

    @classmethod
    def from_parts(cls, A, Y, r, sigma2: float) -> ChainState:
        a = _values(A)
        r = check_state(r, a.shape[1])
        X = derive_x(a, r)
        Y = np.array(Y, dtype=float)
        return cls(Y=Y, r=r.copy(), sigma2=float(sigma2), X=X, residual=a - X @ Y)

    def refresh(self, A):
        """Recompute ``X`` and the residual from scratch."""
        a = _values(A)
        self.X = derive_x(a, self.r)
        self.residual = a - self.X @ self.Y

    def loss(self) -> float:
        return float(np.mean(self.residual * self.residual))


@dataclass
class Trace:
    losses: np.ndarray
    retained_iterations: np.ndarray
    retained_r: np.ndarray
    retained_sigma2: np.ndarray
    monitor_indices: np.ndarray
    retained_y: np.ndarray
    selection_scores: np.ndarray
    accepted_swaps: int
    final_state: ChainState = field(repr=False)
    config: ChainConfig | None = None

    @property
    def retained_losses(self) -> np.ndarray:
        return self.losses[self.retained_iterations - 1]

    def mean_loss(self) -> float:
        """Mean MSE over the retained (post-burn-in, thinned) iterations."""
        return float(np.mean(self.retained_losses))

    def min_loss(self) -> float:
        return float(np.min(self.retained_losses))


def _values(A) -> np.ndarray:
    return A.values if isinstance(A, DataMatrix) else np.asarray(A, dtype=float)


def posterior_row_params(state: ChainState, A, k: int, hyper: Hyperparams):
    """Posterior parent means and precisions of ``Y[k, :]`` (one per column l).

    ``tau_l = sum_i x_ik^2 / sigma2 + tau_kl`` and
    ``mu_l = (x_k . (a_l - sum_{j != k} x_j y_jl) / sigma2 + tau_kl mu_kl) / tau_l``.
    """
    n = state.Y.shape[0]
    mu0 = hyper.mu_matrix(n)[k]
    tau0 = hyper.tau_matrix(n)[k]
    x = state.X[:, k]
    ss = float(x @ x)
    if ss == 0.0:
        return mu0.copy(), tau0.copy()
    # residual with row k's own contribution added back
    partial = x @ state.residual + ss * state.Y[k]
    tau_post = ss / state.sigma2 + tau0
    mu_post = (partial / state.sigma2 + tau0 * mu0) / tau_post
    return mu_post, tau_post


def update_row(state: ChainState, A, k: int, hyper: Hyperparams, rng: Generator):
    """Redraw every entry of ``Y[k, :]`` from its conditional GTN."""
    mu_post, tau_post = posterior_row_params(state, A, k, hyper)
    new = sample_gtn_array(mu_post, tau_post, hyper.a, hyper.b, rng)
    x = state.X[:, k]
    if state.r[k]:
        state.residual -= np.outer(x, new - state.Y[k])
    state.Y[k] = new


def cond_update_y(state: ChainState, A, k: int, l: int, hyper: Hyperparams, rng: Generator) -> float:
    """Redraw the single entry ``Y[k, l]`` and patch residual column ``l``."""
    mu_post, tau_post = posterior_row_params(state, A, k, hyper)
    new = float(sample_gtn_array(mu_post[l], tau_post[l], hyper.a, hyper.b, rng))
    if state.r[k]:
        state.residual[:, l] -= state.X[:, k] * (new - state.Y[k, l])
    state.Y[k, l] = new
    return new


def sweep_y(state: ChainState, A, hyper: Hyperparams, rng: Generator):
    """One full pass over ``Y``.

    Basis rows are redrawn in index order. Rows of interpolated columns do not
    touch the likelihood, so they are drawn from the prior in one batch.
    """
    a = _values(A)
    n = state.Y.shape[0]
    for k in np.flatnonzero(state.r == 1):
        update_row(state, a, int(k), hyper, rng)
    I = np.flatnonzero(state.r == 0)
    if I.size:
        state.Y[I] = sample_gtn_array(hyper.mu_matrix(n)[I], hyper.tau_matrix(n)[I], hyper.a, hyper.b, rng)


def _swap_delta(state: ChainState, a: np.ndarray, j: int, i: int) -> np.ndarray:
    # residual change when basis column j is replaced by column i
    return np.outer(a[:, j], state.Y[j]) - np.outer(a[:, i], state.Y[i])


def likelihood_log_ratio(state: ChainState, A, j: int, i: int) -> float:
    """Log likelihood ratio of moving the basis from ``j`` to ``i`` at fixed Y.

    Uses ``||R + D||^2 - ||R||^2 = 2<R, D> + ||D||^2`` with the rank-2
    change ``D = a_j y_j^T - a_i y_i^T``, never forming ``D`` explicitly.
    """
    a = _values(A)
    if state.r[j] != 1 or state.r[i] != 0:
        raise ValueError("need r_j = 1 and r_i = 0")
    aj, ai = a[:, j], a[:, i]
    yj, yi = state.Y[j], state.Y[i]
    R = state.residual
    cross = aj @ R @ yj - ai @ R @ yi
    sq = (aj @ aj) * (yj @ yj) + (ai @ ai) * (yi @ yi) - 2.0 * (aj @ ai) * (yj @ yi)
    return -(2.0 * cross + sq) / (2.0 * state.sigma2)


def accept_probability(log_odds: float) -> float:
    """``o / (1 + o)`` from ``log o`` without overflow; exactly 0.5 at o = 1."""
    if log_odds >= 0:
        return 1.0 / (1.0 + math.exp(-log_odds))
    e = math.exp(log_odds)
    return e / (1.0 + e)


def swap_log_odds(state: ChainState, A, j: int, i: int, importance=None) -> float:
    log_odds = likelihood_log_ratio(state, A, j, i)
    if importance is not None:
        log_odds += log_prior_odds(importance, j, i)
    return log_odds


def swap_step(state: ChainState, A, rng: Generator, importance=None) -> bool:
    """Propose exchanging a random basis column with a random interpolated one.

    With ``importance`` (IID mode) the prior odds are reweighted by the column
    priorities; without it (GBT mode) the prior factor is 1. Returns whether
    the swap was accepted.
    """
    a = _values(A)
    J = np.flatnonzero(state.r == 1)
    I = np.flatnonzero(state.r == 0)
    if I.size == 0:
        return False
    j = int(J[rng.integers(J.size)])
    i = int(I[rng.integers(I.size)])
    u = rng.random()
    if u >= accept_probability(swap_log_odds(state, a, j, i, importance)):
        return False
    state.residual += _swap_delta(state, a, j, i)
    state.r[j], state.r[i] = 0, 1
    state.X[:, j] = 0.0
    state.X[:, i] = a[:, i]
    return True


def row_log_marginal(c, E, sigma2: float, mu, tau, a: float, b: float, cE=None) -> float:
    """Log of ``prod_l integral N(E[:, l] | c y, sigma2 I) GTN(y | mu_l, tau_l) dy``.

    The ``-||E||^2 / (2 sigma2)`` term common to every candidate column ``c``
    is dropped. ``cE`` may carry a precomputed ``c @ E``.
    """
    ss = float(c @ c)
    if cE is None:
        cE = c @ E
    tau_post = ss / sigma2 + tau
    mu_post = (cE / sigma2 + tau * mu) / tau_post
    s_post, s0 = np.sqrt(tau_post), np.sqrt(tau)
    terms = (
        0.5 * np.log(tau / tau_post)
        + 0.5 * tau_post * mu_post**2
        - 0.5 * tau * mu**2
        + log_standardized_mass((a - mu_post) * s_post, (b - mu_post) * s_post)
        - log_standardized_mass((a - mu) * s0, (b - mu) * s0)
    )
    return float(np.sum(terms))


def collapsed_log_ratio(state: ChainState, A, j: int, i: int, hyper: Hyperparams) -> float:
    """Log likelihood ratio of moving the basis from ``j`` to ``i`` with the
    coefficient rows ``Y[j, :]`` and ``Y[i, :]`` integrated out."""
    a = _values(A)
    if state.r[j] != 1 or state.r[i] != 0:
        raise ValueError("need r_j = 1 and r_i = 0")
    n = a.shape[1]
    mu, tau = hyper.mu_matrix(n), hyper.tau_matrix(n)
    aj, ai = a[:, j], a[:, i]
    R, yj = state.residual, state.Y[j]
    # c @ (R + a_j y_j^T) without forming the matrix
    cE_i = ai @ R + (ai @ aj) * yj
    cE_j = aj @ R + (aj @ aj) * yj
    s2 = state.sigma2
    return row_log_marginal(ai, None, s2, mu[i], tau[i], hyper.a, hyper.b, cE=cE_i) - row_log_marginal(
        aj, None, s2, mu[j], tau[j], hyper.a, hyper.b, cE=cE_j
    )


def collapsed_swap_step(state: ChainState, A, hyper: Hyperparams, rng: Generator, importance=None) -> bool:
    """Blocked Gibbs update of ``(r_j, r_i, Y[j, :], Y[i, :])``.

    The swap is decided on the odds with both rows integrated out, then both
    rows are redrawn from their conditionals under the chosen state. Unlike
    :func:`swap_step`, an incoming column is not judged by a prior-noise row.
    """
    a = _values(A)
    J = np.flatnonzero(state.r == 1)
    I = np.flatnonzero(state.r == 0)
    if I.size == 0:
        return False
    j = int(J[rng.integers(J.size)])
    i = int(I[rng.integers(I.size)])
    u = rng.random()
    log_odds = collapsed_log_ratio(state, a, j, i, hyper)
    if importance is not None:
        log_odds += log_prior_odds(importance, j, i)
    accepted = u < accept_probability(log_odds)

    # drop row j's contribution so neither row enters the residual; row i is
    # zeroed too because both rows are redrawn from scratch below
    state.residual += np.outer(a[:, j], state.Y[j])
    state.Y[j] = 0.0
    state.Y[i] = 0.0
    if accepted:
        state.r[j], state.r[i] = 0, 1
        state.X[:, j] = 0.0
        state.X[:, i] = a[:, i]
    keep, drop = (i, j) if accepted else (j, i)
    update_row(state, a, keep, hyper, rng)
    update_row(state, a, drop, hyper, rng)
    return bool(accepted)


def cond_update_sigma2(state: ChainState, A, hyper: Hyperparams, rng: Generator) -> float:
    """Draw the noise variance from its inverse-Gamma conditional."""
    m, n = state.residual.shape
    shape = 0.5 * m * n + hyper.alpha_sigma
    scale = 0.5 * float(np.sum(state.residual * state.residual)) + hyper.beta_sigma
    state.sigma2 = sample_inverse_gamma(shape, scale, rng)
    return state.sigma2


def init_state(A, K: int, hyper: Hyperparams, rng: Generator) -> ChainState:
    """Random K-subset basis, Y and sigma2 drawn from their priors."""
    a = _values(A)
    n = a.shape[1]
    r = np.zeros(n, dtype=np.int8)
    r[rng.choice(n, size=K, replace=False)] = 1
    Y = sample_gtn_array(hyper.mu_matrix(n), hyper.tau_matrix(n), hyper.a, hyper.b, rng)
    sigma2 = sample_inverse_gamma(hyper.alpha_sigma, hyper.beta_sigma, rng)
    return ChainState.from_parts(a, Y, r, sigma2)


def _monitor_indices(n: int, count: int) -> np.ndarray:
    count = min(count, n * n)
    return np.unique(np.linspace(0, n * n - 1, count).round().astype(int))


def _converged(losses: list[float], tol: float, window: int = 10) -> bool:
    if len(losses) < 2 * window:
        return False
    cur = np.mean(losses[-window:])
    prev = np.mean(losses[-window - 1 : -1])
    return abs(cur - prev) <= tol * max(abs(prev), np.finfo(float).tiny)


def run_chain(A, config: ChainConfig, hyper: Hyperparams | None = None, importance=None) -> Trace:
    """Run one seeded chain and collect the retained samples."""
    a = _values(A)
    m, n = a.shape
    config.validate_for(n)
    hyper = hyper or Hyperparams()
    if config.mode == IID:
        if importance is None:
            raise ValueError("IID mode requires an importance vector")
        importance = np.asarray(importance, dtype=float)
        if importance.shape != (n,):
            raise ValueError(f"importance has shape {importance.shape}, expected ({n},)")
    elif importance is not None:
        raise ValueError("GBT mode takes no importance vector")

    rng = rng_stream(config.seed)
    state = init_state(a, config.K, hyper, rng)
    monitor = _monitor_indices(n, config.n_monitor)

    losses: list[float] = []
    kept_iter, kept_r, kept_s2, kept_y = [], [], [], []
    accepted = 0
    for t in range(1, config.iterations + 1):
        for _ in range(config.swaps_per_sweep):
            if config.swap_move == COLLAPSED:
                accepted += collapsed_swap_step(state, a, hyper, rng, importance)
            else:
                accepted += swap_step(state, a, rng, importance)
        if t % config.refresh_every == 0:
            state.refresh(a)
        cond_update_sigma2(state, a, hyper, rng)
        sweep_y(state, a, hyper, rng)
        losses.append(state.loss())

        if t > config.burn_in:
            kept_y.append(state.Y.ravel()[monitor].copy())
            if (t - config.burn_in) % config.thinning == 0:
                kept_iter.append(t)
                kept_r.append(state.r.copy())
                kept_s2.append(state.sigma2)
        if config.early_stop and t > config.burn_in and kept_iter and _converged(losses, config.early_stop_tol):
            break

    retained_r = np.array(kept_r, dtype=np.int8).reshape(-1, n)
    scores = retained_r.mean(axis=0) if retained_r.size else np.zeros(n)
    return Trace(
        losses=np.array(losses),
        retained_iterations=np.array(kept_iter, dtype=int),
        retained_r=retained_r,
        retained_sigma2=np.array(kept_s2),
        monitor_indices=monitor,
        retained_y=np.array(kept_y).reshape(-1, monitor.size),
        selection_scores=scores,
        accepted_swaps=accepted,
        final_state=state,
        config=config,
    )


def top_m_select(scores, m: int) -> np.ndarray:
    """Indices of the ``m`` largest scores; ties go to the lower index."""
    scores = np.asarray(scores, dtype=float)
    if m > scores.size:
        raise ValueError(f"cannot select {m} of {scores.size} columns")
    if m < 0:
        raise ValueError("m must be nonnegative")
    order = np.lexsort((np.arange(scores.size), -scores))
    return order[:m]


def autocorrelation(samples, max_lag: int) -> np.ndarray:
    """Sample autocorrelation at lags ``0..max_lag``.

    A 2-D input is treated as one series per column and the coefficients are
    averaged across columns. A constant series yields ``[1, 0, 0, ...]``.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim == 2:
        return np.mean([autocorrelation(col, max_lag) for col in x.T], axis=0)
    if x.size <= max_lag:
        raise ValueError("series must be longer than max_lag")
    xc = x - x.mean()
    denom = float(xc @ xc)
    out = np.zeros(max_lag + 1)
    out[0] = 1.0
    if denom == 0.0:
        return out
    for lag in range(1, max_lag + 1):
        out[lag] = float(xc[:-lag] @ xc[lag:]) / denom
    return out
