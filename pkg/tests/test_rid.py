from __future__ import annotations

import numpy as np
import pytest

from bayesid.rid import RidConfig, randomized_id


def test_only_nonzero_columns_are_chosen():
    g = np.random.default_rng(0)
    A = np.zeros((10, 12))
    cols = [2, 7, 9]
    A[:, cols] = g.standard_normal((10, 3))
    res = randomized_id(A, 3, seed=1)
    assert res.basis_indices.tolist() == cols
    assert res.reconstruction_mse <= 1e-10


def test_exact_rank_instances():
    g = np.random.default_rng(1)
    for t in range(20):
        A = g.standard_normal((25, 4)) @ g.standard_normal((4, 30))
        res = randomized_id(A, 4, seed=t)
        assert res.reconstruction_mse <= 1e-8
        assert np.array_equal(res.W[:, res.basis_indices], np.eye(4))
        assert res.weak_pivots == 0 and not res.rank_deficient


def test_same_seed_same_basis():
    A = np.random.default_rng(2).standard_normal((15, 20))
    assert np.array_equal(randomized_id(A, 5, 9).basis_indices, randomized_id(A, 5, 9).basis_indices)


def test_rank_shortfall_is_flagged():
    g = np.random.default_rng(3)
    A = g.standard_normal((10, 2)) @ g.standard_normal((2, 8))
    res = randomized_id(A, 4, seed=0)
    assert res.basis_indices.size == 4 and len(set(res.basis_indices.tolist())) == 4
    assert res.weak_pivots == 2 and res.rank_deficient


def test_bad_k_and_config():
    with pytest.raises(ValueError):
        randomized_id(np.ones((3, 5)), 4, 0)
    with pytest.raises(ValueError):
        randomized_id(np.ones((3, 5)), 0, 0)
    with pytest.raises(ValueError):
        RidConfig(oversampling=-1)


def test_power_iterations_optional():
    A = np.random.default_rng(4).standard_normal((12, 4)) @ np.random.default_rng(5).standard_normal((4, 16))
    res = randomized_id(A, 4, 0, RidConfig(oversampling=2, power_iterations=0))
    assert res.reconstruction_mse <= 1e-8
