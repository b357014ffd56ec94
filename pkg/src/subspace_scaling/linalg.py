"""Small dense linear algebra shared by the trackers and the theory code.

Everything here works on n x d matrices with d small, so the expensive
factorizations are always d x d eigendecompositions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Eigenvalues at or below this are treated as zero.
SINGULAR_TOL = 1e-12
# Cosines may overshoot 1 by roundoff; anything beyond this is a real error.
COSINE_SLACK = 1e-9


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when a Gram matrix is (numerically) rank deficient."""


@dataclass(frozen=True)
class CosineSimilarity:
    """Cosine similarity matrix ``Q`` and its singular values sorted descending."""

    Q: np.ndarray
    cosines: np.ndarray


def psd_inv_sqrt(M: np.ndarray) -> np.ndarray:
    """Inverse principal square root of a symmetric positive definite matrix."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.T)) > 1e-10 * scale:
        raise ValueError("matrix is not symmetric")
    mu, V = np.linalg.eigh(M)
    if mu[0] <= SINGULAR_TOL:
        raise SingularMatrixError(f"smallest eigenvalue {mu[0]:.3e} is not positive")
    return (V / np.sqrt(mu)) @ V.T


def orthonormalize(X: np.ndarray) -> np.ndarray:
    """Symmetric orthogonalization ``X (X^T X)^{-1/2}``.

    Unlike a QR factor this keeps the result as close as possible to ``X``,
    which is what the Oja update assumes. Cost is O(n d^2).
    """
    X = np.asarray(X, dtype=float)
    gram = X.T @ X
    gram = 0.5 * (gram + gram.T)
    return X @ psd_inv_sqrt(gram)


def masked_least_squares(X: np.ndarray, obs, eps: float):
    """Least-squares coefficients using only the observed rows of ``X``.

    ``obs`` is anything with ``y`` and ``mask`` attributes (normally an
    :class:`~subspace_scaling.model.Observation`). Returns ``(w_hat, ok)``.
    When the smallest eigenvalue of ``X^T Omega X`` is at most ``eps`` the
    coefficients are not computed, ``w_hat`` is None and ``ok`` is False;
    callers treat that as a skipped step.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    idx = np.flatnonzero(obs.mask)
    if idx.size == 0:
        return None, False
    Xo = X[idx]
    Z = Xo.T @ Xo
    if np.linalg.eigvalsh(Z)[0] <= eps:
        return None, False
    w_hat = np.linalg.solve(Z, Xo.T @ obs.y[idx])
    return w_hat, True


def cosine_similarity(U: np.ndarray, X: np.ndarray) -> CosineSimilarity:
    """Cosines of the principal angles between span(U) and span(X)."""
    U = np.asarray(U, dtype=float)
    X = np.asarray(X, dtype=float)
    gram = X.T @ X
    Q = U.T @ X @ psd_inv_sqrt(0.5 * (gram + gram.T))
    return CosineSimilarity(Q=Q, cosines=singular_cosines(Q))


def singular_cosines(Q: np.ndarray, slack: float = COSINE_SLACK) -> np.ndarray:
    """Singular values of ``Q`` clamped to [0, 1], sorted descending."""
    s = np.linalg.svd(np.atleast_2d(Q), compute_uv=False)
    if s.size and s[0] > 1.0 + slack:
        raise ValueError(f"cosine {s[0]!r} exceeds 1 beyond roundoff")
    return np.clip(s, 0.0, 1.0)
