"""Dense symmetric positive definite matrix primitives.

Matrices are plain ``numpy`` arrays. Positive definiteness is always decided
by attempting a Cholesky factorization, never by scanning eigenvalues.
"""

import numpy as np
from scipy import linalg

from .errors import DimensionMismatch, NotPositiveDefinite

SYMMETRY_RTOL = 1e-12
EIG_CLAMP = 1e-14


def _as_square(M, name="matrix"):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {M.shape}")
    return M


def is_symmetric(M, rtol=SYMMETRY_RTOL):
    M = np.asarray(M, dtype=float)
    scale = max(np.abs(M).max(initial=0.0), np.finfo(float).tiny)
    return bool(np.abs(M - M.T).max(initial=0.0) <= rtol * scale)


def symmetrize(M):
    return 0.5 * (M + M.T)


def cholesky(M):
    """Lower Cholesky factor ``C`` with ``C @ C.T == M``.

    Raises
    ------
    NotPositiveDefinite
        If ``M`` is not symmetric or a non-positive pivot is met.
    """
    M = _as_square(M)
    if not is_symmetric(M):
        raise NotPositiveDefinite("matrix is not symmetric")
    if not np.all(np.isfinite(M)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    try:
        C = linalg.cholesky(M, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    if not np.all(np.diag(C) > 0):
        raise NotPositiveDefinite("non-positive pivot")
    return C


def is_spd(M):
    try:
        cholesky(M)
    except (NotPositiveDefinite, DimensionMismatch):
        return False
    return True


def spd_inverse(M):
    """Inverse of an SPD matrix via triangular solves on its Cholesky factor."""
    C = cholesky(M)
    Cinv = linalg.solve_triangular(C, np.eye(C.shape[0]), lower=True,
                                   check_finite=False)
    return Cinv.T @ Cinv


def log_det(M):
    """``log det M`` computed as twice the sum of log Cholesky pivots."""
    C = cholesky(M)
    return 2.0 * float(np.sum(np.log(np.diag(C))))


def sym_power(M, t, clamp=EIG_CLAMP):
    """``M**t`` for symmetric ``M`` by eigendecomposition, eigenvalues clamped below."""
    w, V = np.linalg.eigh(symmetrize(M))
    w = np.maximum(w, clamp)
    return symmetrize((V * w**t) @ V.T)


def geodesic_point(A, B, t):
    """Point at time ``t`` on the affine-invariant geodesic from ``A`` to ``B``.

    Returns ``A^{1/2} (A^{-1/2} B A^{-1/2})^t A^{1/2}``.
    """
    A = _as_square(A, "A")
    B = _as_square(B, "B")
    if A.shape != B.shape:
        raise DimensionMismatch(f"shapes {A.shape} and {B.shape} differ")
    w, V = np.linalg.eigh(symmetrize(A))
    if w.min() <= 0:
        raise NotPositiveDefinite("A is not positive definite")
    A_half = (V * np.sqrt(w)) @ V.T
    A_mhalf = (V / np.sqrt(w)) @ V.T
    inner = sym_power(A_mhalf @ B @ A_mhalf, t)
    return symmetrize(A_half @ inner @ A_half)


def normalized_sq_frobenius_error(est, truth):
    """``||est - truth||_F^2 / ||truth||_F^2``."""
    est = np.asarray(est, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if est.shape != truth.shape:
        raise DimensionMismatch(f"shapes {est.shape} and {truth.shape} differ")
    return float(np.sum((est - truth) ** 2) / np.sum(truth**2))


def relative_frobenius(a, b):
    """``||a - b||_F / ||b||_F``, the convergence and agreement metric."""
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))
