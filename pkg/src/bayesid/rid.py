"""Randomized interpolative decomposition, the non-Bayesian comparison arm."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import DataMatrix, interpolation_weights
from .sampling import rng_stream

# trailing pivot magnitudes below this fraction of the leading one are
# reported as numerically zero
PIVOT_RTOL = 1e-10


@dataclass
class RidResult:
    basis_indices: np.ndarray
    W: np.ndarray
    reconstruction_mse: float
    weak_pivots: int = 0
    rank_deficient: bool = False


@dataclass(frozen=True)
class RidConfig:
    oversampling: int = 10
    power_iterations: int = 1

    def __post_init__(self):
        if self.oversampling < 0 or self.power_iterations < 0:
            raise ValueError("oversampling and power_iterations must be nonnegative")


def row_sketch(a: np.ndarray, rows: int, power_iterations: int, rng) -> np.ndarray:
    """``G A (A^T A)^q`` with a Gaussian ``G``, re-orthonormalized each pass."""
    B = rng.standard_normal((rows, a.shape[0])) @ a
    for _ in range(power_iterations):
        Z, _ = np.linalg.qr(a @ B.T)
        B = Z.T @ a
    return B


def randomized_id(A, K: int, seed: int, config: RidConfig | None = None) -> RidResult:
    """Pick ``K`` columns by pivoted QR on a random row sketch of ``A``.

    The basis is returned sorted. ``W`` has the identity on the basis columns
    and least-squares coefficients elsewhere.
    """
    a = A.values if isinstance(A, DataMatrix) else np.asarray(A, dtype=float)
    m, n = a.shape
    if not 1 <= K <= min(m, n):
        raise ValueError(f"need 1 <= K <= min(M, N) = {min(m, n)}, got K={K}")
    config = config or RidConfig()
    rng = rng_stream(seed)
    B = row_sketch(a, K + config.oversampling, config.power_iterations, rng)
    R, piv = scipy.linalg.qr(B, mode="r", pivoting=True)
    diag = np.abs(np.diag(R))
    lead = diag[0] if diag.size else 0.0
    top = diag[:K]
    weak = int(np.sum(top <= PIVOT_RTOL * lead)) if lead > 0 else K
    J = np.sort(piv[:K])
    W, rank = interpolation_weights(a, J)
    resid = a - a[:, J] @ W
    return RidResult(
        basis_indices=J,
        W=W,
        reconstruction_mse=float(np.mean(resid * resid)),
        weak_pivots=weak,
        rank_deficient=rank < K,
    )
