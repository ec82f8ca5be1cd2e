"""Small dense linear algebra: matrix exponentials, φ-functions, moments, null spaces."""
from typing import Optional, Tuple
import logging

import numpy as np
import scipy.linalg

from hyperperiodic.config import get_settings
from hyperperiodic.exceptions import ExpmOverflowError
from hyperperiodic.schemas.problem import MAX_COMPONENTS

logger = logging.getLogger(__name__)

MAX_EXPM_DIMENSION = 6 * MAX_COMPONENTS


def expm(M: np.ndarray, h: float = 1.0) -> np.ndarray:
    """exp(M h) by scaling and squaring with a Padé core (scipy.linalg.expm).

    Raises ExpmOverflowError when ‖Mh‖ exceeds the configured limit or the
    result is not finite.
    """
    A = np.asarray(M, dtype=complex) * h
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expm needs a square matrix, got shape {A.shape}")
    if A.shape[0] > MAX_EXPM_DIMENSION:
        raise ValueError(f"expm is meant for small blocks, got n={A.shape[0]}")
    norm = np.linalg.norm(A, 1)
    limit = get_settings().EXPM_NORM_LIMIT
    if norm > limit:
        raise ExpmOverflowError(
            f"matrix exponential argument too large (‖Mh‖₁={norm:.3e} > {limit:.1e})",
            {"norm": float(norm), "limit": limit},
        )
    E = scipy.linalg.expm(A)
    if not np.all(np.isfinite(E)):
        raise ExpmOverflowError("matrix exponential overflowed", {"norm": float(norm)})
    return E


def phi_blocks(M: np.ndarray, h: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return exp(Mh), φ₁(Mh), φ₂(Mh) from one augmented exponential.

    exp([[Mh, I, 0], [0, 0, I], [0, 0, 0]]) carries the three blocks in its
    first block row.
    """
    n = M.shape[0]
    W = np.zeros((3 * n, 3 * n), dtype=complex)
    W[:n, :n] = np.asarray(M, dtype=complex) * h
    W[:n, n:2 * n] = np.eye(n)
    W[n:2 * n, 2 * n:] = np.eye(n)
    big = expm(W)
    return big[:n, :n], big[:n, n:2 * n], big[:n, 2 * n:]


def null_space(K: np.ndarray, rtol: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Orthonormal null vectors of a small square matrix and its singular values.

    A right singular vector counts as null when σ < rtol·σ_max.
    """
    rtol = get_settings().NULLSPACE_RTOL if rtol is None else rtol
    _, sigma, Vh = np.linalg.svd(K)
    scale = sigma[0] if sigma.size and sigma[0] > 0 else 1.0
    mask = sigma < rtol * scale
    return Vh[mask].conj().T, sigma


def left_null_space(K: np.ndarray, rtol: Optional[float] = None) -> np.ndarray:
    """Orthonormal w with wᴴK = 0, as columns."""
    W, _ = null_space(K.conj().T, rtol)
    return W


def relative_sigma_min(K: np.ndarray) -> float:
    sigma = np.linalg.svd(K, compute_uv=False)
    return float(sigma[-1] / sigma[0]) if sigma[0] > 0 else 0.0


def min_norm_solve(K: np.ndarray, rhs: np.ndarray, rtol: Optional[float] = None) -> np.ndarray:
    """Minimum-norm least-squares solution with the null-space cutoff as rcond."""
    rtol = get_settings().NULLSPACE_RTOL if rtol is None else rtol
    x, *_ = scipy.linalg.lstsq(K, rhs, cond=rtol)
    return x


def moment_blocks(M: np.ndarray, h: float) -> Tuple[np.ndarray, np.ndarray]:
    """First and second moments of u' = Mu + g0 + τσ over one subcell of width h.

    Returns (K, L), each of shape (3, d, d), with
    ∫₀ʰ u dτ = K[0]u(0) + K[1]g0 + K[2]σ and ∫₀ʰ τu dτ = h·∫₀ʰ u dτ - (L[0]u(0) + L[1]g0 + L[2]σ).
    Both come from one exponential of the state (u, ∫u, ∫∫u, g0, τσ, σ).
    """
    d = M.shape[0]
    eye = np.eye(d)
    W = np.zeros((6 * d, 6 * d), dtype=complex)

    def block(i: int, j: int):
        return slice(i * d, (i + 1) * d), slice(j * d, (j + 1) * d)

    W[block(0, 0)] = np.asarray(M, dtype=complex)
    W[block(0, 3)] = eye
    W[block(0, 4)] = eye
    W[block(1, 0)] = eye
    W[block(2, 1)] = eye
    W[block(4, 5)] = eye
    big = expm(W, h)
    columns = (0, 3, 5)
    K = np.stack([big[block(1, j)] for j in columns])
    L = np.stack([big[block(2, j)] for j in columns])
    return K, L


def phi_series(Z: np.ndarray, terms: int = 12) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """exp(Z), φ₁(Z), φ₂(Z) for a stack of small matrices (..., d, d) by Taylor sums.

    Meant for ‖Z‖ well below one, where the truncated series is exact to rounding.
    """
    Z = np.asarray(Z, dtype=complex)
    eye = np.broadcast_to(np.eye(Z.shape[-1], dtype=complex), Z.shape)
    power = np.array(eye)
    E = np.zeros_like(Z)
    phi1 = np.zeros_like(Z)
    phi2 = np.zeros_like(Z)
    factorial = 1.0
    for k in range(terms):
        E += power / factorial
        phi1 += power / (factorial * (k + 1))
        phi2 += power / (factorial * (k + 1) * (k + 2))
        power = power @ Z
        factorial *= k + 1
    return E, phi1, phi2
