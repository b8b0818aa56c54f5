"""Rho-function families, likelihood objectives and the MGGD itself.

An elliptical density with generator ``g`` gives the per-sample loss
``rho(x) = -log g(x)`` evaluated at the quadratic form ``x = z' S^{-1} z``;
``u = rho'`` supplies the reweighting used by the fixed-point and MM solvers.

The negative log-likelihood uses the real-valued normalization

    L0(S) = sum_i rho(z_i' S^{-1} z_i) + (n/2) log det S,

so that for the Gaussian generator (``beta = 1``) the minimizer is the
sample second-moment matrix.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import linalg
from scipy.special import gammaln

from .errors import DimensionMismatch, DomainError, InvalidShape
from .spd import cholesky

U_CLAMP = 1e-12


@dataclass(frozen=True)
class RhoFamily:
    """A loss ``rho`` with derivative ``u`` and the convexity facts the solvers rely on.

    ``rho`` and ``u`` act elementwise on arrays of positive quadratic forms.
    Build instances with :func:`mggd_rho`, :func:`tyler_rho` or
    :func:`huber_rho`; a custom family only needs the two callables and
    honest flags.
    """

    name: str
    rho: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    u: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    nondecreasing: bool = True
    rho_exp_convex: bool = True
    rho_sq_convex: bool = False
    beta: Optional[float] = None
    p: Optional[int] = None
    huber_threshold: Optional[float] = None
    # rho'' <= 0 everywhere, which is what makes the MM surrogate a majorizer
    concave: bool = False
    unbounded_at_zero: bool = False


def mggd_rho(beta):
    """``rho(x) = x**beta / 2``, the multivariate generalized Gaussian."""
    beta = float(beta)
    if not beta > 0:
        raise InvalidShape(f"MGGD shape must be positive, got {beta}")

    def rho(x):
        return 0.5 * np.power(np.asarray(x, dtype=float), beta)

    def u(x):
        x = np.asarray(x, dtype=float)
        if beta < 1:
            x = np.maximum(x, U_CLAMP)
        return 0.5 * beta * np.power(x, beta - 1.0)

    return RhoFamily("mggd", rho, u, nondecreasing=True, rho_exp_convex=True,
                     rho_sq_convex=beta >= 0.5, beta=beta, concave=beta <= 1)


def tyler_rho(p):
    """``rho(x) = (p/2) log x``; the fixed point is Tyler's M-estimator."""
    p = int(p)
    if p < 1:
        raise DimensionMismatch(f"Tyler family needs p >= 1, got {p}")

    def rho(x):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise DomainError("Tyler rho is unbounded below at a zero quadratic form")
        return 0.5 * p * np.log(x)

    def u(x):
        return 0.5 * p / np.asarray(x, dtype=float)

    return RhoFamily("tyler", rho, u, nondecreasing=True, rho_exp_convex=True,
                     rho_sq_convex=False, p=p, concave=True, unbounded_at_zero=True)


def huber_rho(threshold):
    """Loss whose derivative is the Huber weight.

    ``u(x) = 1/2`` up to ``threshold`` and ``threshold / (2x)`` above, with
    ``rho(threshold) = threshold / 2``.
    """
    c = float(threshold)
    if not c > 0:
        raise ValueError(f"Huber threshold must be positive, got {c}")

    def rho(x):
        x = np.asarray(x, dtype=float)
        big = x > c
        return np.where(big, 0.5 * c + 0.5 * c * np.log(np.where(big, x, c) / c), 0.5 * x)

    def u(x):
        x = np.asarray(x, dtype=float)
        return np.where(x > c, 0.5 * c / np.maximum(x, c), 0.5)

    return RhoFamily("huber", rho, u, nondecreasing=True, rho_exp_convex=True,
                     rho_sq_convex=False, huber_threshold=c, concave=True)


def as_samples(data, p=None):
    """Validate and return an ``(n, p)`` float array of observations."""
    Z = np.asarray(data, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None] if p == 1 else Z[None, :]
    if Z.ndim != 2:
        raise DimensionMismatch(f"samples must be a 2-D array, got ndim={Z.ndim}")
    if p is not None and Z.shape[1] != p:
        raise DimensionMismatch(f"samples have {Z.shape[1]} columns, expected {p}")
    if not np.all(np.isfinite(Z)):
        raise ValueError("samples contain non-finite entries")
    return Z


def quadratic_forms(Z, S):
    """``z_i' S^{-1} z_i`` for every row of ``Z``."""
    C = cholesky(S)
    Y = linalg.solve_triangular(C, Z.T, lower=True, check_finite=False)
    return np.einsum("ij,ij->j", Y, Y)


def neg_log_likelihood(S, data, f):
    """``sum_i rho(z_i' S^{-1} z_i) + (n/2) log det S``."""
    S = np.asarray(S, dtype=float)
    Z = as_samples(data, S.shape[0])
    C = cholesky(S)
    Y = linalg.solve_triangular(C, Z.T, lower=True, check_finite=False)
    q = np.einsum("ij,ij->j", Y, Y)
    if f.unbounded_at_zero and np.any(q <= 0):
        raise DomainError(f"{f.name} loss is undefined for a sample at the origin")
    n = Z.shape[0]
    return float(np.sum(f.rho(q)) + n * np.sum(np.log(np.diag(C))))


def cholesky_objective(C, data, f):
    """Objective in the Cholesky factor of the concentration ``S^{-1} = C C'``.

    ``sum_i rho(||C' z_i||^2) - n sum_j log C_jj``; equals
    ``neg_log_likelihood(inv(C C'), data, f)``.
    """
    C = np.asarray(C, dtype=float)
    Z = as_samples(data, C.shape[0])
    d = np.diag(C)
    if np.any(d <= 0):
        return np.inf
    q = np.sum((Z @ C) ** 2, axis=1)
    return float(np.sum(f.rho(q)) - Z.shape[0] * np.sum(np.log(d)))


def mggd_log_norm_const(p, beta):
    """Log of the constant making ``exp(-q**beta / 2) / sqrt(det S)`` integrate to one."""
    a = p / (2.0 * beta)
    return (np.log(beta) + gammaln(p / 2.0) - 0.5 * p * np.log(np.pi)
            - gammaln(a) - a * np.log(2.0))


def mggd_log_density(z, mu, S, beta):
    """MGGD log-density at one point or at each row of a 2-D ``z``."""
    if not beta > 0:
        raise InvalidShape(f"MGGD shape must be positive, got {beta}")
    S = np.atleast_2d(np.asarray(S, dtype=float))
    p = S.shape[0]
    z = np.asarray(z, dtype=float)
    single = z.ndim <= 1
    Z = z.reshape(-1, p) - np.asarray(mu, dtype=float).reshape(1, p)
    C = cholesky(S)
    Y = linalg.solve_triangular(C, Z.T, lower=True, check_finite=False)
    q = np.einsum("ij,ij->j", Y, Y)
    out = (mggd_log_norm_const(p, beta) - np.sum(np.log(np.diag(C)))
           - 0.5 * np.power(q, beta))
    return float(out[0]) if single else out


def mggd_sample(n, mu, S, beta, seed):
    """Draw ``n`` MGGD observations ``mu + r * A w``.

    ``A`` is the Cholesky factor of ``S``, ``w`` is uniform on the unit
    sphere and ``r = (2 s)**(1 / (2 beta))`` with ``s ~ Gamma(p / (2 beta))``.
    ``seed`` is an integer or a ``numpy.random.Generator``.
    """
    if not beta > 0:
        raise InvalidShape(f"MGGD shape must be positive, got {beta}")
    S = np.atleast_2d(np.asarray(S, dtype=float))
    p = S.shape[0]
    mu = np.broadcast_to(np.asarray(mu, dtype=float), (p,))
    if n == 0:
        return np.empty((0, p))
    A = cholesky(S)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    w = rng.standard_normal((n, p))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    s = rng.gamma(p / (2.0 * beta), 1.0, size=n)
    r = (2.0 * s) ** (1.0 / (2.0 * beta))
    return mu + (r[:, None] * w) @ A.T


def covariance_scale(beta, p):
    """Ratio ``c(beta)`` between the MGGD covariance and its scatter matrix.

    ``2**(1/beta) * Gamma((p + 2) / (2 beta)) / (p * Gamma(p / (2 beta)))``.
    """
    if not beta > 0:
        raise InvalidShape(f"MGGD shape must be positive, got {beta}")
    if beta == 1:
        return 1.0
    return float(np.exp(np.log(2.0) / beta + gammaln((p + 2) / (2.0 * beta))
                        - np.log(p) - gammaln(p / (2.0 * beta))))


def span_rank(data):
    return int(np.linalg.matrix_rank(as_samples(data)))


__all__ = [
    "RhoFamily", "mggd_rho", "tyler_rho", "huber_rho", "neg_log_likelihood",
    "cholesky_objective", "mggd_log_density", "mggd_log_norm_const",
    "mggd_sample", "covariance_scale", "quadratic_forms", "as_samples",
    "span_rank",
]
