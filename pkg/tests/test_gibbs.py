from __future__ import annotations

import copy
import math

import numpy as np
import pytest
from scipy import integrate

from bayesid.core import Hyperparams, derive_x, mse, state_from_indices
from bayesid.gibbs import (
    COLLAPSED,
    GBT,
    IID,
    ChainConfig,
    ChainState,
    accept_probability,
    autocorrelation,
    collapsed_log_ratio,
    collapsed_swap_step,
    cond_update_sigma2,
    cond_update_y,
    likelihood_log_ratio,
    posterior_row_params,
    row_log_marginal,
    run_chain,
    swap_log_odds,
    swap_step,
    sweep_y,
    top_m_select,
)
from bayesid.importance import squash, uniform_importance
from bayesid.sampling import rng_stream, sample_gtn_array

HYPER = Hyperparams()


def random_state(seed, m=8, n=6, k=3, sigma2=0.7):
    g = np.random.default_rng(seed)
    A = g.standard_normal((m, n))
    Y = g.uniform(-1, 1, (n, n))
    r = state_from_indices(g.choice(n, k, replace=False), n)
    return A, ChainState.from_parts(A, Y, r, sigma2)


def full_sse(A, Y, r):
    R = A - derive_x(A, r) @ Y
    return float(np.sum(R * R))


# ---------------------------------------------------------------- y update


def test_posterior_equals_prior_for_interpolated_row():
    A, state = random_state(0)
    k = int(np.flatnonzero(state.r == 0)[0])
    mu, tau = posterior_row_params(state, A, k, HYPER)
    assert np.all(mu == 0.0) and np.all(tau == 1.0)


def test_posterior_hand_example():
    A = np.array([[1.0, 0.5]])
    state = ChainState.from_parts(A, np.zeros((2, 2)), [1, 0], 1.0)
    mu, tau = posterior_row_params(state, A, 0, HYPER)
    assert tau == pytest.approx(2.0) and mu[1] == pytest.approx(0.25)


def test_posterior_precision_never_below_prior():
    for seed in range(20):
        A, state = random_state(seed)
        for k in range(A.shape[1]):
            _, tau = posterior_row_params(state, A, k, HYPER)
            assert np.all(tau >= 1.0)


def test_posterior_mean_matches_explicit_sum():
    A, state = random_state(3)
    k = int(np.flatnonzero(state.r == 1)[0])
    X = state.X
    mu, tau = posterior_row_params(state, A, k, HYPER)
    for l in range(A.shape[1]):
        others = sum(X[:, j] * state.Y[j, l] for j in range(A.shape[1]) if j != k)
        num = X[:, k] @ (A[:, l] - others) / state.sigma2
        t = X[:, k] @ X[:, k] / state.sigma2 + 1.0
        assert tau[l] == pytest.approx(t) and mu[l] == pytest.approx(num / t, abs=1e-12)


def test_cond_update_y_keeps_residual_in_sync():
    A, state = random_state(4)
    rng = rng_stream(0)
    for k in range(6):
        for l in range(6):
            v = cond_update_y(state, A, k, l, HYPER, rng)
            assert -1.0 <= v <= 1.0
    assert np.allclose(state.residual, A - state.X @ state.Y, atol=1e-12)


# ---------------------------------------------------------------- swap


def test_likelihood_ratio_against_recompute():
    for seed in range(50):
        A, state = random_state(seed)
        j = int(np.flatnonzero(state.r == 1)[0])
        i = int(np.flatnonzero(state.r == 0)[-1])
        r2 = state.r.copy()
        r2[j], r2[i] = 0, 1
        ref = -(full_sse(A, state.Y, r2) - full_sse(A, state.Y, state.r)) / (2 * state.sigma2)
        assert likelihood_log_ratio(state, A, j, i) == pytest.approx(ref, abs=1e-8)


def test_likelihood_ratio_zero_for_identical_columns():
    g = np.random.default_rng(1)
    A = g.standard_normal((5, 3))
    A[:, 2] = A[:, 0]
    Y = g.uniform(-1, 1, (3, 3))
    Y[2] = Y[0]
    state = ChainState.from_parts(A, Y, [1, 0, 0], 1.0)
    assert likelihood_log_ratio(state, A, 0, 2) == pytest.approx(0.0, abs=1e-12)


def test_likelihood_ratio_vanishes_for_large_variance():
    A, state = random_state(2)
    state.sigma2 = 1e12
    j, i = int(np.flatnonzero(state.r == 1)[0]), int(np.flatnonzero(state.r == 0)[0])
    assert abs(likelihood_log_ratio(state, A, j, i)) < 1e-9


def test_likelihood_ratio_requires_valid_pair():
    A, state = random_state(2)
    j = int(np.flatnonzero(state.r == 1)[0])
    with pytest.raises(ValueError):
        likelihood_log_ratio(state, A, j, j)


def test_accept_probability():
    assert accept_probability(0.0) == 0.5
    assert accept_probability(math.log(3)) == pytest.approx(0.75)
    assert accept_probability(-1000.0) == 0.0 and accept_probability(1000.0) == 1.0


def test_uniform_importance_same_odds_as_gbt():
    A, state = random_state(5)
    p = uniform_importance(A.shape[1])
    for j in np.flatnonzero(state.r == 1):
        for i in np.flatnonzero(state.r == 0):
            assert swap_log_odds(state, A, j, i, p) == swap_log_odds(state, A, j, i)


def test_acceptance_frequency_matches_probability():
    g = np.random.default_rng(7)
    A = g.standard_normal((3, 2)) * 0.6
    base = ChainState.from_parts(A, g.uniform(-1, 1, (2, 2)), [1, 0], 1.0)
    prob = accept_probability(likelihood_log_ratio(base, A, 0, 1))
    rng = rng_stream(9)
    n = 100_000
    hits = sum(swap_step(copy.deepcopy(base), A, rng) for _ in range(n))
    assert abs(hits / n - prob) <= 0.01


def test_swap_keeps_exactly_k_and_caches():
    A, state = random_state(6)
    rng = rng_stream(1)
    for _ in range(200):
        swap_step(state, A, rng)
        assert state.r.sum() == 3
        assert np.array_equal(state.X, derive_x(A, state.r))
    assert np.allclose(state.residual, A - state.X @ state.Y, atol=1e-10)


def test_collapsed_swap_keeps_exactly_k_and_caches():
    A, state = random_state(7)
    rng = rng_stream(2)
    for _ in range(200):
        collapsed_swap_step(state, A, HYPER, rng)
        assert state.r.sum() == 3
        assert np.array_equal(state.X, derive_x(A, state.r))
    assert np.allclose(state.residual, A - state.X @ state.Y, atol=1e-10)


# ---------------------------------------------------------------- stationarity


def three_state_target(log_weights):
    w = np.exp(np.asarray(log_weights) - np.max(log_weights))
    return w / w.sum()


def visit_frequencies(step, state, n_steps=100_000):
    counts = np.zeros(3)
    for _ in range(n_steps):
        step(state)
        counts[int(np.flatnonzero(state.r)[0])] += 1
    return counts / n_steps


STATIONARY_A = np.array([[0.9, 0.2, -0.4], [0.1, -0.7, 0.5], [-0.3, 0.4, 0.8]])
STATIONARY_Y = np.array([[0.5, -0.2, 0.3], [0.1, 0.6, -0.4], [-0.3, 0.2, 0.7]])
STATIONARY_P = squash([1.2, -0.8, 0.1])


def fixed_move_target(importance):
    A, Y, s2 = STATIONARY_A, STATIONARY_Y, 0.5
    logw = []
    for n in range(3):
        logw.append(-full_sse(A, Y, state_from_indices([n], 3)) / (2 * s2))
        if importance is not None:
            logw[-1] += math.log(importance[n]) - math.log1p(-importance[n])
    return three_state_target(logw)


@pytest.mark.parametrize("mode", [GBT, IID])
def test_fixed_move_stationary_distribution(mode):
    imp = STATIONARY_P if mode == IID else None
    A = STATIONARY_A
    state = ChainState.from_parts(A, STATIONARY_Y, [1, 0, 0], 0.5)
    rng = rng_stream(21)
    freq = visit_frequencies(lambda s: swap_step(s, A, rng, imp), state)
    assert 0.5 * np.abs(freq - fixed_move_target(imp)).sum() < 0.02


def marginal_by_quadrature(c, E, sigma2):
    """log prod_l int N(E_l | c y, s2) GTN(y | 0, 1, -1, 1) dy / N(E_l | 0, s2)."""
    z = integrate.quad(lambda y: math.exp(-0.5 * y * y), -1, 1)[0]
    total = 0.0
    for e in E.T:
        f = lambda y: math.exp(-(np.sum((e - c * y) ** 2) - np.sum(e * e)) / (2 * sigma2) - 0.5 * y * y)
        total += math.log(integrate.quad(f, -1, 1, epsabs=0, epsrel=1e-12)[0] / z)
    return total


def test_row_log_marginal_against_quadrature():
    g = np.random.default_rng(3)
    c, E = g.standard_normal(4), g.standard_normal((4, 3))
    for s2 in (0.05, 0.5, 3.0):
        got = row_log_marginal(c, E, s2, np.zeros(3), np.ones(3), -1.0, 1.0)
        assert got == pytest.approx(marginal_by_quadrature(c, E, s2), rel=1e-9, abs=1e-9)


def test_collapsed_ratio_is_difference_of_marginals():
    A, state = random_state(8)
    j, i = int(np.flatnonzero(state.r == 1)[0]), int(np.flatnonzero(state.r == 0)[0])
    E = state.residual + np.outer(A[:, j], state.Y[j])
    mu, tau = np.zeros(6), np.ones(6)
    ref = row_log_marginal(A[:, i], E, state.sigma2, mu, tau, -1, 1) - row_log_marginal(
        A[:, j], E, state.sigma2, mu, tau, -1, 1
    )
    assert collapsed_log_ratio(state, A, j, i, HYPER) == pytest.approx(ref, abs=1e-10)


@pytest.mark.parametrize("mode", [GBT, IID])
def test_collapsed_move_stationary_distribution(mode):
    imp = STATIONARY_P if mode == IID else None
    A, s2 = STATIONARY_A, 0.5
    logw = [row_log_marginal(A[:, n], A, s2, np.zeros(3), np.ones(3), -1.0, 1.0) for n in range(3)]
    if imp is not None:
        logw = [w + math.log(imp[n]) - math.log1p(-imp[n]) for n, w in enumerate(logw)]
    state = ChainState.from_parts(A, STATIONARY_Y, [1, 0, 0], s2)
    rng = rng_stream(22)
    freq = visit_frequencies(lambda s: collapsed_swap_step(s, A, HYPER, rng, imp), state, 30_000)
    assert 0.5 * np.abs(freq - three_state_target(logw)).sum() < 0.02


# ---------------------------------------------------------------- sigma2


def test_sigma2_posterior_parameters():
    A = np.ones((2, 2))
    state = ChainState.from_parts(A, np.eye(2), [1, 1], 1.0)
    assert np.all(state.residual == 0)

    class Capture:
        def gamma(self, shape, scale, size=None):
            self.shape = shape
            return 1.0

    cap = Capture()
    s2 = cond_update_sigma2(state, A, HYPER, cap)
    assert cap.shape == pytest.approx(2.1) and s2 == pytest.approx(1.0)


def test_sigma2_posterior_mean():
    A, state = random_state(9)
    sse = float(np.sum(state.residual**2))
    shape, scale = 0.5 * A.size + 0.1, 0.5 * sse + 1.0
    rng = rng_stream(4)
    draws = np.array([cond_update_sigma2(state, A, HYPER, rng) for _ in range(100_000)])
    assert draws.mean() == pytest.approx(scale / (shape - 1), rel=0.02)


# ---------------------------------------------------------------- chain


def synthetic(seed, m=20, n=24, k=3, noise=0.05):
    g = np.random.default_rng(seed)
    W = g.uniform(-1, 1, (k, n))
    W[:, g.choice(n, k, replace=False)] = np.eye(k)
    return g.standard_normal((m, k)) @ W + noise * g.standard_normal((m, n))


def test_chain_config_validation():
    with pytest.raises(ValueError):
        ChainConfig(K=2, iterations=10, burn_in=10)
    with pytest.raises(ValueError):
        ChainConfig(K=0)
    with pytest.raises(ValueError):
        ChainConfig(K=2, mode="other")
    with pytest.raises(ValueError):
        run_chain(np.ones((3, 3)), ChainConfig(K=4, iterations=5, burn_in=1))


def test_mode_importance_contract():
    A = synthetic(0)
    with pytest.raises(ValueError):
        run_chain(A, ChainConfig(K=3, iterations=5, burn_in=1, mode=IID))
    with pytest.raises(ValueError):
        run_chain(A, ChainConfig(K=3, iterations=5, burn_in=1), importance=uniform_importance(24))


def test_chain_is_deterministic():
    A = synthetic(1)
    cfg = ChainConfig(K=3, iterations=60, burn_in=10, seed=5)
    t1, t2 = run_chain(A, cfg), run_chain(A, cfg)
    assert np.array_equal(t1.losses, t2.losses)
    assert np.array_equal(t1.retained_r, t2.retained_r)
    assert np.array_equal(t1.retained_y, t2.retained_y)


@pytest.mark.parametrize("move", ["fixed", COLLAPSED])
def test_uniform_iid_reproduces_gbt_trace(move):
    A = synthetic(2)
    gbt = run_chain(A, ChainConfig(K=3, iterations=60, burn_in=10, seed=3, swap_move=move))
    iid = run_chain(
        A, ChainConfig(K=3, iterations=60, burn_in=10, seed=3, mode=IID, swap_move=move),
        importance=uniform_importance(24),
    )
    assert np.array_equal(gbt.losses, iid.losses)
    assert np.array_equal(gbt.retained_r, iid.retained_r)
    assert np.array_equal(gbt.retained_sigma2, iid.retained_sigma2)


def test_trace_bookkeeping():
    A = synthetic(3)
    cfg = ChainConfig(K=3, iterations=100, burn_in=20, thinning=5, seed=1, swap_move=COLLAPSED)
    tr = run_chain(A, cfg)
    assert tr.losses.size == 100
    assert tr.retained_iterations.tolist() == list(range(25, 101, 5))
    assert np.all((tr.selection_scores >= 0) & (tr.selection_scores <= 1))
    assert tr.selection_scores.sum() == pytest.approx(3.0)
    assert np.all(np.abs(tr.retained_y) <= 1.0)
    assert np.all(np.abs(tr.final_state.Y) <= 1.0)
    st = tr.final_state
    assert tr.losses[-1] == pytest.approx(mse(A, derive_x(A, st.r), st.Y), abs=1e-12)
    assert tr.mean_loss() == pytest.approx(tr.losses[tr.retained_iterations - 1].mean())


def test_residual_cache_drift_bounded():
    A = synthetic(4)
    state = ChainState.from_parts(A, np.zeros((24, 24)), state_from_indices([0, 1, 2], 24), 0.1)
    rng = rng_stream(3)
    for _ in range(50):
        collapsed_swap_step(state, A, HYPER, rng)
        swap_step(state, A, rng)
        sweep_y(state, A, HYPER, rng)
    fresh = A - derive_x(A, state.r) @ state.Y
    assert np.linalg.norm(state.residual - fresh) <= 1e-8 * np.linalg.norm(fresh)


def test_early_stop_shortens_converged_chain():
    A = synthetic(5)
    cfg = ChainConfig(K=3, iterations=400, burn_in=20, seed=0, early_stop=True, early_stop_tol=0.05)
    tr = run_chain(A, cfg)
    assert tr.losses.size < 400


def test_exact_rank_loss_drops_three_orders_within_100_iterations():
    """Exact-rank 40 x 60 input with its true K: the best loss in the first 100
    iterations should be at most 1e-3 of the loss at initialization."""
    g = np.random.default_rng(0)
    W = g.uniform(-1, 1, (5, 60))
    W[:, g.choice(60, 5, replace=False)] = np.eye(5)
    A = g.standard_normal((40, 5)) @ W
    cfg = ChainConfig(K=5, iterations=100, burn_in=50, seed=0)
    rng = rng_stream(cfg.seed)
    from bayesid.gibbs import init_state

    initial = init_state(A, 5, HYPER, rng).loss()
    assert run_chain(A, cfg).losses.min() <= 1e-3 * initial


# ---------------------------------------------------------------- selection and diagnostics


def test_top_m_select_examples():
    assert (top_m_select([0.1, 0.9, 0.5], 2) + 1).tolist() == [2, 3]
    assert (top_m_select([0.4, 0.4, 0.4], 2) + 1).tolist() == [1, 2]
    with pytest.raises(ValueError):
        top_m_select([0.1], 2)


def test_top_m_select_against_full_sort():
    g = np.random.default_rng(0)
    for _ in range(50):
        s = g.integers(0, 5, 20) / 4
        ref = sorted(range(20), key=lambda i: (-s[i], i))[:7]
        assert top_m_select(s, 7).tolist() == ref


def test_autocorrelation_examples():
    g = np.random.default_rng(0)
    white = g.standard_normal(10_000)
    acf = autocorrelation(white, 10)
    assert acf[0] == 1.0 and np.all(np.abs(acf[1:]) < 0.05)
    x = np.zeros(20_000)
    e = g.standard_normal(20_000)
    for t in range(1, x.size):
        x[t] = 0.5 * x[t - 1] + e[t]
    assert autocorrelation(x, 3)[1] == pytest.approx(0.5, abs=0.05)
    assert autocorrelation(np.ones(10), 3).tolist() == [1.0, 0.0, 0.0, 0.0]
    with pytest.raises(ValueError):
        autocorrelation(np.ones(3), 3)


def test_autocorrelation_averages_columns():
    g = np.random.default_rng(1)
    X = g.standard_normal((500, 3))
    ref = np.mean([autocorrelation(X[:, c], 4) for c in range(3)], axis=0)
    assert np.allclose(autocorrelation(X, 4), ref)


def test_prior_row_batch_matches_entrywise_law():
    """Interpolated rows are drawn from the prior in one call; check the
    batch has the prior GTN mean."""
    A = synthetic(6)
    state = ChainState.from_parts(A, np.zeros((24, 24)), state_from_indices([0, 1, 2], 24), 0.1)
    rng = rng_stream(0)
    vals = []
    for _ in range(200):
        sweep_y(state, A, HYPER, rng)
        vals.append(state.Y[3:].ravel().copy())
    vals = np.concatenate(vals)
    ref = sample_gtn_array(np.zeros(vals.size), 1.0, -1.0, 1.0, rng_stream(1))
    assert abs(vals.mean()) < 0.01 and np.var(vals) == pytest.approx(np.var(ref), rel=0.02)
