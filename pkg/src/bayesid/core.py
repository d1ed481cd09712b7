"""Interpolative-decomposition data types and deterministic operations.

The decomposition is ``A ~= C W`` with ``C = A[:, J]`` and ``W[:, J] = I``.
Sampling works with the equivalent ``A ~= X Y`` where ``X`` keeps the basis
columns of ``A`` and zeroes the rest, and ``Y[J, :] = W``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# relative singular-value cutoff for the post-processing refit
LSTSQ_RCOND = 1e-10


@dataclass
class DataMatrix:
    values: np.ndarray
    row_labels: list[str] | None = None
    col_labels: list[str] | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or min(self.values.shape) < 1:
            raise ValueError(f"data matrix must be 2-D and non-empty, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("data matrix contains non-finite entries")
        m, n = self.values.shape
        if self.row_labels is not None and len(self.row_labels) != m:
            raise ValueError("row label count does not match the row count")
        if self.col_labels is not None and len(self.col_labels) != n:
            raise ValueError("column label count does not match the column count")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def transposed(self) -> DataMatrix:
        return DataMatrix(self.values.T.copy(), self.col_labels, self.row_labels)


@dataclass
class Hyperparams:
    """Prior settings; ``mu``/``tau`` may be scalars or N x N arrays."""

    a: float = -1.0
    b: float = 1.0
    alpha_sigma: float = 0.1
    beta_sigma: float = 1.0
    mu: float | np.ndarray = 0.0
    tau: float | np.ndarray = 1.0

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("truncation bounds need a < b")
        if not (self.alpha_sigma > 0 and self.beta_sigma > 0):
            raise ValueError("alpha_sigma and beta_sigma must be positive")
        if np.any(np.asarray(self.tau) <= 0):
            raise ValueError("parent precisions must be positive")

    def mu_matrix(self, n: int) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.mu, dtype=float), (n, n))

    def tau_matrix(self, n: int) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.tau, dtype=float), (n, n))


@dataclass
class Decomposition:
    C: np.ndarray
    W: np.ndarray
    basis_indices: np.ndarray
    mse: float | None = None
    rank_deficient: bool = False
    n_large_weights: int = 0
    meta: dict = field(default_factory=dict)


def _values(A) -> np.ndarray:
    return A.values if isinstance(A, DataMatrix) else np.asarray(A, dtype=float)


def check_state(r, n: int, k: int | None = None) -> np.ndarray:
    r = np.asarray(r)
    if r.shape != (n,):
        raise ValueError(f"state vector has shape {r.shape}, expected ({n},)")
    if not np.all((r == 0) | (r == 1)):
        raise ValueError("state vector must be binary")
    if k is not None and int(r.sum()) != k:
        raise ValueError(f"state vector has {int(r.sum())} ones, expected {k}")
    return r.astype(np.int8)


def basis_indices(r) -> np.ndarray:
    """Sorted indices J of the basis columns."""
    return np.flatnonzero(np.asarray(r) == 1)


def state_from_indices(indices: Sequence[int], n: int) -> np.ndarray:
    r = np.zeros(n, dtype=np.int8)
    r[list(indices)] = 1
    return r


def derive_x(A, r) -> np.ndarray:
    """Copy of ``A`` with the interpolated (r == 0) columns zeroed."""
    a = _values(A)
    r = check_state(r, a.shape[1])
    return a * r[None, :]


def mse(A, X, Y) -> float:
    a = _values(A)
    resid = a - np.asarray(X) @ np.asarray(Y)
    return float(np.mean(resid * resid))


def extract_cw(A, Y, r) -> Decomposition:
    """Read ``C = A[:, J]`` and ``W = Y[J, :]`` off a sampled state."""
    a = _values(A)
    r = check_state(r, a.shape[1])
    J = basis_indices(r)
    if J.size == 0:
        raise ValueError("state vector selects no basis columns")
    return Decomposition(C=a[:, J].copy(), W=np.asarray(Y)[J, :].copy(), basis_indices=J)


def interpolation_weights(a: np.ndarray, J: np.ndarray) -> tuple[np.ndarray, int]:
    """Least-squares W with the identity enforced on the basis block.

    Returns ``(W, rank)`` where ``rank`` is the numerical rank of ``A[:, J]``.
    """
    n = a.shape[1]
    C = a[:, J]
    I = np.setdiff1d(np.arange(n), J)
    W = np.zeros((J.size, n))
    W[:, J] = np.eye(J.size)
    s = np.linalg.svd(C, compute_uv=False)
    rank = int(np.sum(s > LSTSQ_RCOND * s[0])) if s.size and s[0] > 0 else 0
    if I.size:
        W[:, I] = np.linalg.lstsq(C, a[:, I], rcond=LSTSQ_RCOND)[0]
    return W, rank


def postprocess(A, r) -> Decomposition:
    """Enforce ``W[:, J] = I`` and refit the interpolated columns.

    The refit is unconstrained; entries with ``|w| > 1`` are counted in
    ``n_large_weights`` rather than clipped.
    """
    a = _values(A)
    r = check_state(r, a.shape[1])
    J = basis_indices(r)
    if J.size == 0:
        raise ValueError("state vector selects no basis columns")
    W, rank = interpolation_weights(a, J)
    C = a[:, J].copy()
    resid = a - C @ W
    return Decomposition(
        C=C,
        W=W,
        basis_indices=J,
        mse=float(np.mean(resid * resid)),
        rank_deficient=rank < J.size,
        n_large_weights=int(np.sum(np.abs(W) > 1.0 + 1e-12)),
    )
