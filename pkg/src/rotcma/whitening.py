"""Prewhitening / signal-subspace projection.

``fit_whitener`` eigendecomposes the sample covariance ``(1/K) Y Y^H``
(cyclic Jacobi; the dimensions here are small) and keeps the M dominant
eigenpairs, producing ``B = diag(w_M)^(-1/2) @ U_M^H``.  Applying B both
projects onto the signal subspace when N > M and equalizes the output
covariance to the identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import eigh_jacobi

__all__ = ["DegenerateCovarianceError", "Whitener", "fit_whitener", "whiten"]


class DegenerateCovarianceError(ArithmeticError):
    """Raised when the sample covariance has fewer than M usable eigenvalues."""


@dataclass
class Whitener:
    """Whitening matrix plus the retained covariance eigenvalues (descending)."""

    matrix: np.ndarray  # B, M x N
    eigenvalues: np.ndarray  # (M,) largest eigenvalues of the sample covariance


def fit_whitener(Y, M):
    """Fit the M-dimensional whitener of an N x K observation block.

    Requires K >= M and M significant covariance eigenvalues (above
    1e-12 of the trace).  The fitted B satisfies
    ``B @ C @ B^H == I_M`` to 1e-8 on the fitting covariance C.
    """
    Y = np.asarray(Y, dtype=complex)
    N, K = Y.shape
    if K < M:
        raise ValueError(f"need at least M={M} samples, got K={K}")
    C = (Y @ Y.conj().T) / K
    w, U = eigh_jacobi(C)  # ascending
    w_m = w[::-1][:M]
    U_m = U[:, ::-1][:, :M]
    if np.min(w_m) <= 1e-12 * float(np.trace(C).real):
        raise DegenerateCovarianceError(
            f"covariance has fewer than {M} significant eigenvalues"
        )
    B = (1.0 / np.sqrt(w_m))[:, None] * U_m.conj().T
    return Whitener(matrix=B, eigenvalues=w_m)


def whiten(whitener, Y):
    """Apply a fitted whitener: ``B @ Y``."""
    Y = np.asarray(Y, dtype=complex)
    if Y.shape[0] != whitener.matrix.shape[1]:
        raise ValueError(
            f"block has {Y.shape[0]} rows, whitener expects {whitener.matrix.shape[1]}"
        )
    return whitener.matrix @ Y
