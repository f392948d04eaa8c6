"""Dense linear-algebra kernel: spatial signs, vec, Kronecker products,
Frobenius distances.

Everything operates on plain numpy arrays. The vectorization convention is
column-major (Fortran order) throughout the package: entry (i, j) of a p x p
matrix lands at position j * p + i of its vec. All vectorized covariances
downstream inherit this ordering; mixing orderings would silently corrupt
the sandwich formula, so it is fixed here once.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError


def require_finite(a, name: str = "input") -> np.ndarray:
    """Coerce to a float array and reject non-finite entries."""
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} must contain only finite values")
    return a


def row_norms(X: np.ndarray) -> np.ndarray:
    """Euclidean norms of the rows of X.

    Rows whose plain sum of squares under- or overflows (entries below
    ~1e-154 or above ~1e154) are recomputed with max-entry rescaling, so
    they still get a positive finite norm. Exact-zero rows get norm exactly
    0. The singularity-family experiments produce rows at extreme
    magnitudes routinely, hence the care.
    """
    X = np.asarray(X, dtype=float)
    d2 = np.einsum("ij,ij->i", X, X)
    # outside this range the plain sum of squares is zero, subnormal
    # (reduced precision), or at overflow risk
    bad = ~((d2 >= 1e-280) & (d2 <= 1e280))
    r = np.sqrt(d2)
    if np.any(bad):
        sub = X[bad]
        m = np.max(np.abs(sub), axis=1)
        safe = np.where(m > 0.0, m, 1.0)
        scaled = sub / safe[:, None]
        r[bad] = safe * np.sqrt(np.einsum("ij,ij->i", scaled, scaled))
    return r


def spatial_sign(x) -> np.ndarray:
    """Direction x/|x| of a p-vector; the zero vector maps to itself."""
    x = require_finite(x, "spatial_sign input")
    if x.ndim != 1:
        raise InvalidInputError("spatial_sign expects a 1-d vector")
    m = np.max(np.abs(x)) if x.size else 0.0
    if m == 0.0:
        return np.zeros_like(x)
    v = x / m
    return v / np.sqrt(v @ v)


def spatial_signs(X: np.ndarray) -> np.ndarray:
    """Row-wise spatial signs of an n x p matrix; zero rows stay zero."""
    X = np.asarray(X, dtype=float)
    r = row_norms(X)
    safe = np.where(r > 0.0, r, 1.0)
    return X / safe[:, None]


def sign_outer(x) -> np.ndarray:
    """Rank-<=1 matrix s(x) s(x)^T; trace is 1 for x != 0, else 0."""
    u = spatial_sign(x)
    return np.outer(u, u)


def vec(M) -> np.ndarray:
    """Column-stacked vectorization: entry (i, j) lands at j * p + i."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise InvalidInputError("vec expects a 2-d matrix")
    return M.ravel(order="F")


def kron(A, B) -> np.ndarray:
    """Kronecker product; block (i, j) equals A[i, j] * B."""
    return np.kron(np.asarray(A, dtype=float), np.asarray(B, dtype=float))


def frobenius_sq_distance(A, B) -> float:
    """Squared Frobenius distance sum((A - B)**2)."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise InvalidInputError(f"shape mismatch: {A.shape} vs {B.shape}")
    d = A - B
    return float(np.sum(d * d))


def symmetrize(M: np.ndarray) -> np.ndarray:
    """(M + M^T) / 2, killing floating-point drift from accumulation."""
    return (M + M.T) / 2.0
