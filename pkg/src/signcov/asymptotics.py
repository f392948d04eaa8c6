"""Empirical estimators of the limit-law covariances of the SSCM.

For observations X_i and a location t, let u_i = s(X_i - t) and
Z_i = vec(u_i u_i^T) (column-major vec, as everywhere in the package).

* ``fixed_location_cov``   -- covariance of the Z_i: the limit covariance of
  sqrt(n) * vec(fixed-location SSCM - population SSCM). Under symmetry of F
  about t it is also the limit covariance of the plug-in estimator.
* ``location_sensitivity`` -- the p^2 x p derivative-style matrix describing
  how vec of the SSCM reacts to a shift of the location:
  2 E[((x kron x) x^T)/|x|^4] - E[x/|x|^2] kron I - I kron E[x/|x|^2]
  with x = X - t. It vanishes under symmetry.
* ``joint_mean_cov``       -- covariance of the stacked vector (X_i - t, Z_i);
  the joint limit covariance when the location estimator is the sample mean.
* ``sandwich_cov``         -- A J A^T with A = (sensitivity, I_{p^2}): the
  plug-in limit covariance for asymmetric F with mean location.

All empirical covariances use 1/n normalization; the asymptotics do not
distinguish 1/n from 1/(n-1), and 1/n matches the plug-in limit expressions.
Observations coinciding exactly with t contribute Z = 0 to the covariances
and are excluded from the sensitivity expectations (whose integrands are
undefined at 0).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSampleError, InvalidInputError
from .linalg import require_finite, row_norms, spatial_signs, symmetrize
from .location import _as_sample

# flag joint-covariance estimates on samples whose coordinates show this
# much excess kurtosis: finite second moments are the caller's
# responsibility, but an exploding fourth moment is a visible symptom
_KURTOSIS_FLAG_LEVEL = 100.0


def vec_sign_outers(X, t) -> np.ndarray:
    """n x p^2 matrix whose rows are vec(s(X_i - t) s(X_i - t)^T)."""
    X = _as_sample(X)
    t = require_finite(t, "location")
    U = spatial_signs(X - t)
    n, p = U.shape
    # row-major flatten of (j, i) blocks == column-major vec of the outer
    A = U[:, :, None] * U[:, None, :]
    return A.reshape(n, p * p)


def fixed_location_cov(X, t) -> np.ndarray:
    """Empirical covariance (1/n) of the vectorized sign outer products."""
    X = _as_sample(X)
    if X.shape[0] < 2:
        raise InvalidInputError("need at least 2 observations")
    Z = vec_sign_outers(X, t)
    Zc = Z - Z.mean(axis=0)
    return symmetrize(Zc.T @ Zc) / X.shape[0]


def location_sensitivity(X, t) -> np.ndarray:
    """Plug-in estimate of the location-sensitivity matrix (p^2 x p)."""
    X = _as_sample(X)
    t = require_finite(t, "location")
    D = X - t
    r = row_norms(D)
    keep = r > 0.0
    if not np.any(keep):
        raise DegenerateSampleError("every observation coincides with the location")
    D = D[keep]
    r = r[keep]
    n, p = D.shape
    U = D / r[:, None]          # signs
    Ur = U / r[:, None]         # x/|x|^2
    # 2 * mean_i of (u_i kron u_i)(x_i/|x_i|^2)^T, built from the vec rows
    A = U[:, :, None] * U[:, None, :]
    Z = A.reshape(n, p * p)
    first = 2.0 * (Z.T @ Ur) / n
    m = Ur.mean(axis=0)
    second = np.kron(m[:, None], np.eye(p))
    third = np.kron(np.eye(p), m[:, None])
    return first - second - third


def joint_mean_cov(X, t) -> np.ndarray:
    """Empirical covariance (1/n) of the stacked vector (X_i - t, Z_i).

    This is the joint limit covariance of sqrt(n) * (mean - t, vec(SSCM - S))
    when the location estimator is the sample mean; other estimators are out
    of scope for this function.
    """
    X = _as_sample(X)
    if X.shape[0] < 2:
        raise InvalidInputError("need at least 2 observations")
    t = require_finite(t, "location")
    Xc = X - X.mean(axis=0)
    m2 = (Xc**2).mean(axis=0)
    m4 = (Xc**4).mean(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        kurt = np.where(m2 > 0.0, m4 / m2**2 - 3.0, 0.0)
    if np.max(kurt) > _KURTOSIS_FLAG_LEVEL:
        warnings.warn(
            f"sample excess kurtosis {np.max(kurt):.1f} suggests heavy tails; "
            "the location block of the joint covariance may be unreliable",
            RuntimeWarning,
            stacklevel=2,
        )
    Z = vec_sign_outers(X, t)
    V = np.hstack([X - t, Z])
    Vc = V - V.mean(axis=0)
    return symmetrize(Vc.T @ Vc) / X.shape[0]


def sandwich_cov(sensitivity, joint_cov) -> np.ndarray:
    """A J A^T with A = (sensitivity, I_{p^2}); symmetrized."""
    B = np.asarray(sensitivity, dtype=float)
    J = np.asarray(joint_cov, dtype=float)
    if B.ndim != 2:
        raise InvalidInputError("sensitivity must be a p^2 x p matrix")
    psq, p = B.shape
    if psq != p * p:
        raise InvalidInputError(f"sensitivity has shape {B.shape}, expected (p^2, p)")
    if J.shape != (p + psq, p + psq):
        raise InvalidInputError(
            f"joint covariance has shape {J.shape}, expected {(p + psq, p + psq)}"
        )
    A = np.hstack([B, np.eye(psq)])
    return symmetrize(A @ J @ A.T)


def element_variance(cov, i: int, j: int) -> float:
    """Limit variance of element (i, j) of the scatter estimate (0-based):
    the diagonal entry of cov at the vec position j * p + i."""
    cov = np.asarray(cov, dtype=float)
    p = math.isqrt(cov.shape[0])
    if p * p != cov.shape[0] or cov.shape[0] != cov.shape[1]:
        raise InvalidInputError("covariance must be p^2 x p^2")
    if not (0 <= i < p and 0 <= j < p):
        raise InvalidInputError(f"indices ({i}, {j}) out of range for p = {p}")
    pos = j * p + i
    return float(cov[pos, pos])


@dataclass
class AsymptoticsBundle:
    """All limit-covariance pieces for one sample and location.

    block_matrix is (sensitivity, I_{p^2}) and plugin_cov is
    block_matrix @ joint_cov @ block_matrix^T; joint_cov (and therefore
    plugin_cov) is meaningful for the sample-mean location.
    """

    fixed_cov: np.ndarray
    sensitivity: np.ndarray
    joint_cov: np.ndarray
    block_matrix: np.ndarray
    plugin_cov: np.ndarray
    n_used: int

    def to_json_dict(self) -> dict:
        def mat(M):
            M = np.asarray(M)
            return {"dims": list(M.shape), "data": M.ravel(order="C").tolist()}

        return {
            "fixed_cov": mat(self.fixed_cov),
            "sensitivity": mat(self.sensitivity),
            "joint_cov": mat(self.joint_cov),
            "block_matrix": mat(self.block_matrix),
            "plugin_cov": mat(self.plugin_cov),
            "n_used": self.n_used,
        }


def compute_bundle(X, t) -> AsymptoticsBundle:
    """Estimate every piece of the plug-in limit law at location t."""
    X = _as_sample(X)
    t = require_finite(t, "location")
    W = fixed_location_cov(X, t)
    B = location_sensitivity(X, t)
    J = joint_mean_cov(X, t)
    A = np.hstack([B, np.eye(B.shape[0])])
    return AsymptoticsBundle(
        fixed_cov=W,
        sensitivity=B,
        joint_cov=J,
        block_matrix=A,
        plugin_cov=sandwich_cov(B, J),
        n_used=X.shape[0],
    )
