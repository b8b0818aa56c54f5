"""Scatter estimators: unconstrained, chordal-constrained and penalized.

Every solver works on zero-mean observations stored row-wise in an
``(n, p)`` array and minimizes (a constrained version of)

    L0(S) = sum_i rho(z_i' S^{-1} z_i) + (n/2) log det S.

Constrained problems are parameterized either by the concentration
``K = S^{-1}`` or by its lower Cholesky factor ``K = C C'``; on a chordal
pattern whose natural order is perfect the two parameterizations share the
same sparsity, and the objective is convex in ``C`` whenever ``rho(x**2)``
is convex.
"""

from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
import json
import logging
from typing import Optional, Union
import warnings

import numpy as np
from scipy import linalg

from .errors import (
    DimensionMismatch,
    DivergedWeights,
    MaxIterExceeded,
    NotPerfectOrder,
    NotPositiveDefinite,
    PreconditionViolation,
    RankDeficientData,
)
from .graphs import (
    find_perfect_elimination_order,
    inverse_permutation,
    is_perfect_elimination_order,
    permute_pattern,
    require_perfect_order,
)
from .models import as_samples, cholesky_objective, neg_log_likelihood, quadratic_forms
from .spd import cholesky, relative_frobenius, spd_inverse, symmetrize

logger = logging.getLogger(__name__)

RSS_RTOL = 1e-12
DIAG_FLOOR = 1e-10
POLISH_STEPS = 2


@dataclass
class FitConfig:
    """Iteration controls shared by the reweighting solvers.

    ``init`` is ``"identity"``, ``"sample"`` (second-moment matrix) or an
    explicit SPD starting scatter.
    """

    max_iter: int = 30
    rel_tol: float = 1e-8
    quad_clamp: float = 1e-12
    init: Union[str, np.ndarray] = "identity"

    def __post_init__(self):
        if int(self.max_iter) < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if isinstance(self.init, str) and self.init not in ("identity", "sample"):
            raise ValueError(f"unknown init {self.init!r}")


@dataclass
class FitReport:
    scatter: np.ndarray
    factor: Optional[np.ndarray] = None
    objective_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    info: dict = field(default_factory=dict)

    def to_dict(self):
        out = {
            "scatter": np.asarray(self.scatter).tolist(),
            "factor": None if self.factor is None else np.asarray(self.factor).tolist(),
            "objective_trace": [float(v) for v in self.objective_trace],
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "info": self.info,
        }
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _initial_scatter(init, Z):
    p = Z.shape[1]
    if isinstance(init, str):
        if init == "identity":
            return np.eye(p)
        S = Z.T @ Z / Z.shape[0]
        if np.linalg.matrix_rank(Z) < p:
            raise RankDeficientData("sample second-moment matrix is singular")
        return S
    S = np.asarray(init, dtype=float)
    if S.shape != (p, p):
        raise DimensionMismatch(f"initial scatter has shape {S.shape}, expected {(p, p)}")
    cholesky(S)
    return S


def _weights(Z, S, f, clamp):
    q = np.maximum(quadratic_forms(Z, S), clamp)
    alpha = f.u(q)
    if not np.all(np.isfinite(alpha)):
        raise DivergedWeights("non-finite reweighting weights")
    return alpha


def _drop_origin_samples(Z, f):
    if not f.unbounded_at_zero:
        return Z
    keep = np.any(Z != 0, axis=1)
    if not keep.all():
        warnings.warn(f"dropping {np.count_nonzero(~keep)} samples at the origin "
                      f"({f.name} weight is undefined there)", stacklevel=3)
    return Z[keep]


def _normalize_scale(S, f):
    if f.name == "tyler":
        return S * (S.shape[0] / np.trace(S))
    return S


def _reweighting_loop(Z, f, cfg, step, S0, objective=None):
    """Iterate ``S_{m+1} = step(weights(S_m))`` and record the objective.

    The next iterate depends on ``S_m`` only through the weights, so equal
    consecutive weight vectors certify an exact fixed point.
    """
    if objective is None:
        def objective(S):
            return neg_log_likelihood(S, Z, f)

    S = _normalize_scale(S0, f)
    trace = [objective(S)]
    prev_alpha = None
    converged = False
    iterations = 0
    factor = None
    for _ in range(int(cfg.max_iter)):
        alpha = _weights(Z, S, f, cfg.quad_clamp)
        if prev_alpha is not None and np.array_equal(alpha, prev_alpha):
            converged = True
            break
        S_new, factor = step(alpha)
        S_new = _normalize_scale(S_new, f)
        iterations += 1
        trace.append(objective(S_new))
        change = relative_frobenius(S_new, S)
        S, prev_alpha = S_new, alpha
        if change < cfg.rel_tol:
            converged = True
            break
    return FitReport(S, factor, trace, iterations, converged)


def fit_fixed_point(data, f, cfg=None):
    """Unconstrained M-estimate of scatter by the classical reweighting iteration.

    ``S_{m+1} = (2/n) sum_i u(z_i' S_m^{-1} z_i) z_i z_i'``; for Tyler's loss the
    iterates are rescaled to trace ``p``.

    Raises
    ------
    RankDeficientData
        If the observations do not span ``R^p``.
    """
    cfg = cfg or FitConfig()
    Z = _drop_origin_samples(as_samples(data), f)
    n, p = Z.shape
    if n < p or np.linalg.matrix_rank(Z) < p:
        raise RankDeficientData(f"observations span a proper subspace (n={n}, p={p})")

    def step(alpha):
        return symmetrize((2.0 / n) * (Z * alpha[:, None]).T @ Z), None

    return _reweighting_loop(Z, f, cfg, step, _initial_scatter(cfg.init, Z))


@lru_cache(maxsize=512)
def _regression_groups(G):
    """Columns of ``G`` grouped by their number of later neighbors."""
    groups = defaultdict(list)
    later = G.later_neighbors()
    for j, J in enumerate(later):
        groups[len(J)].append(j)
    out = []
    for k, cols in sorted(groups.items()):
        J = np.stack([later[j] for j in cols]) if k else None
        out.append((np.asarray(cols), J))
    return tuple(out)


def _chordal_factor_from_gram(M, n, G):
    """Closed-form G-sparse factor from the weighted Gram matrix ``M = W'W``.

    Column ``j`` regresses ``W[:, j]`` on ``W[:, J]`` with ``J`` the later
    neighbors of ``j``; with coefficients ``b`` and residual sum of squares
    ``RSS``, ``C[j, j] = sqrt(n / (2 RSS))`` and ``C[J, j] = -C[j, j] b``.
    Columns with equally many regressors are solved as one batch.
    """
    C = np.zeros((G.p, G.p))
    for cols, J in _regression_groups(G):
        mjj = M[cols, cols]
        if J is None:
            rss = mjj
        else:
            A = M[J[:, :, None], J[:, None, :]]
            rhs = M[J, cols[:, None]]
            try:
                b = np.linalg.solve(A, rhs[..., None])[..., 0]
            except np.linalg.LinAlgError:
                raise RankDeficientData("singular regression in chordal solver") from None
            rss = mjj - np.einsum("mk,mk->m", rhs, b)
        if not np.all(rss > RSS_RTOL * np.maximum(mjj, np.finfo(float).tiny)):
            raise RankDeficientData("zero residual in chordal regression")
        d = np.sqrt(n / (2.0 * rss))
        C[cols, cols] = d
        if J is not None:
            C[J, cols[:, None]] = -d[:, None] * b
    return C


def _check_weights(w, n):
    alpha = np.asarray(w, dtype=float).reshape(-1)
    if alpha.shape != (n,):
        raise DimensionMismatch(f"expected {n} weights, got {alpha.shape}")
    if not (np.all(np.isfinite(alpha)) and np.all(alpha >= 0)):
        raise ValueError("weights must be finite and nonnegative")
    return alpha


def solve_weighted_chordal_ggm(data, w, G):
    """Closed-form weighted Gaussian graphical model on a chordal pattern.

    Minimizes ``sum_i w_i ||C' z_i||^2 - n sum_j log C_jj`` over lower
    triangular, G-sparse ``C``; ``inv(C C')`` then minimizes
    ``sum_i w_i z_i' S^{-1} z_i + (n/2) log det S`` subject to
    ``S^{-1}`` being G-sparse.

    Parameters
    ----------
    data : array of shape (n, p)
    w : array of shape (n,)
        Nonnegative sample weights.
    G : SparsityPattern
        Chordal pattern whose natural order is a perfect elimination order.

    Returns
    -------
    C : ndarray of shape (p, p)
        Lower-triangular factor of the estimated concentration.

    Raises
    ------
    NotPerfectOrder
        If the natural order of ``G`` is not perfect (permute first).
    RankDeficientData
        If a column regression is singular or leaves no residual.
    """
    Z = as_samples(data, G.p)
    n = Z.shape[0]
    alpha = _check_weights(w, n)
    if not is_perfect_elimination_order(G, range(G.p)):
        raise NotPerfectOrder("natural order is not a perfect elimination order")
    M = (Z * alpha[:, None]).T @ Z
    return _chordal_factor_from_gram(M, n, G)


def scatter_from_factor(C):
    """``inv(C C')`` for a lower-triangular ``C`` with positive diagonal."""
    Cinv = linalg.solve_triangular(C, np.eye(C.shape[0]), lower=True, check_finite=False)
    return symmetrize(Cinv.T @ Cinv)


def _ordered_problem(Z, G, S0):
    """Permute variables so a perfect elimination order becomes the natural one."""
    order = require_perfect_order(G)
    if order == list(range(G.p)):
        return Z, G, S0, None
    return Z[:, order], permute_pattern(G, order), S0[np.ix_(order, order)], order


def _restore_order(report, order):
    if order is None:
        return report
    inv = inverse_permutation(order)
    report.scatter = report.scatter[np.ix_(inv, inv)]
    report.info["order"] = list(order)
    return report


def fit_chordal_mm(data, f, G, cfg=None):
    """Majorization-minimization for the chordal-constrained M-estimate.

    Each step fixes the weights ``u(z_i' S_m^{-1} z_i)`` and solves the
    resulting weighted Gaussian graphical model in closed form. When ``rho``
    is concave the negative log-likelihood never increases. If ``G`` is
    chordal but its natural order is not perfect, variables are permuted
    internally; ``report.factor`` is then expressed in the permuted order
    recorded in ``report.info["order"]``.

    Raises
    ------
    NonChordalPattern
        If ``G`` admits no perfect elimination order.
    """
    cfg = cfg or FitConfig()
    Z = _drop_origin_samples(as_samples(data, G.p), f)
    n = Z.shape[0]
    Zo, Go, S0, order = _ordered_problem(Z, G, _initial_scatter(cfg.init, Z))

    def step(alpha):
        C = _chordal_factor_from_gram((Zo * alpha[:, None]).T @ Zo, n, Go)
        return scatter_from_factor(C), C

    report = _reweighting_loop(Zo, f, cfg, step, S0)
    return _restore_order(report, order)


def _free_entries(G):
    idx = [(i, i) for i in range(G.p)] + sorted(G.edges)
    I = np.array([a for a, _ in idx], dtype=int)
    J = np.array([b for _, b in idx], dtype=int)
    return I, J


def _ggm_objective(K, M, n):
    try:
        C = cholesky(K)
    except NotPositiveDefinite:
        return np.inf
    return float(np.sum(K * M) - n * np.sum(np.log(np.diag(C))))


def _ggm_newton(M, n, G, K0=None, tol=1e-7, max_iter=200):
    """Minimize ``tr(K M) - (n/2) log det K`` over G-sparse SPD ``K``.

    Damped Newton on the free entries with backtracking that keeps ``K``
    positive definite. Returns ``(K, converged, masked_grad_max)``.
    """
    p = G.p
    I, J = _free_entries(G)
    offdiag = I != J
    c = np.where(offdiag, np.sqrt(2.0), np.sqrt(0.5))
    mask = G.mask()
    if K0 is None:
        K = np.diag(n / (2.0 * np.diag(M)))
    else:
        K = np.where(mask, K0, 0.0)
    obj = _ggm_objective(K, M, n)
    if not np.isfinite(obj):
        K = np.diag(n / (2.0 * np.diag(M)))
        obj = _ggm_objective(K, M, n)
    gmax = np.inf
    polish = POLISH_STEPS
    best = None
    for _ in range(max_iter):
        S = spd_inverse(K)
        Gm = M - 0.5 * n * S
        gmax = float(np.abs(Gm[mask]).max())
        if gmax < tol * n:
            # quadratic convergence: a couple more steps are nearly free
            if best is not None and gmax >= best[1]:
                return best[0], True, best[1]
            best = (K, gmax)
            if polish == 0:
                return K, True, gmax
            polish -= 1
        g = np.where(offdiag, 2.0, 1.0) * Gm[I, J]
        H = 0.5 * n * np.outer(c, c) * (S[np.ix_(I, I)] * S[np.ix_(J, J)]
                                        + S[np.ix_(I, J)] * S[np.ix_(J, I)])
        try:
            d = -linalg.solve(H, g, assume_a="pos", check_finite=False)
        except (linalg.LinAlgError, ValueError):
            d = -g
        D = np.zeros((p, p))
        D[I, J] = d
        D[J, I] = d
        slope = float(g @ d)
        t = 1.0
        for _ in range(60):
            K_try = K + t * D
            obj_try = _ggm_objective(K_try, M, n)
            if obj_try <= obj + 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            return (K, False, gmax) if best is None else (best[0], True, best[1])
        K, obj = symmetrize(K_try), obj_try
    S = spd_inverse(K)
    gmax = float(np.abs((M - 0.5 * n * S)[mask]).max())
    return K, gmax < tol * n, gmax


def solve_weighted_ggm_general(data, w, G, cfg=None, *, tol=1e-7, max_iter=200, K0=None):
    """Weighted Gaussian graphical model on an arbitrary pattern.

    Minimizes ``tr(K M) - (n/2) log det K`` over G-sparse concentrations,
    ``M = sum_i w_i z_i z_i'``, and returns the scatter ``inv(K)``. Stops once
    the pattern-masked gradient has max-norm below ``tol * n``.

    Raises
    ------
    MaxIterExceeded
        With the best scatter attached as ``.result``.
    """
    Z = as_samples(data, G.p)
    n = Z.shape[0]
    alpha = _check_weights(w, n)
    M = (Z * alpha[:, None]).T @ Z
    if np.any(np.diag(M) <= 0):
        raise RankDeficientData("a variable has zero weighted energy")
    if cfg is not None:
        max_iter = max(max_iter, int(cfg.max_iter))
    K, ok, gmax = _ggm_newton(M, n, G, K0=K0, tol=tol, max_iter=max_iter)
    S = spd_inverse(K)
    if not ok:
        raise MaxIterExceeded(f"graphical solver stopped with gradient {gmax:.3g}", S)
    return S


def fit_graphical_mm(data, f, G, cfg=None, *, inner_tol=1e-7):
    """MM on any pattern: closed form when ``G`` is chordal, Newton otherwise."""
    if find_perfect_elimination_order(G) is not None:
        return fit_chordal_mm(data, f, G, cfg)
    cfg = cfg or FitConfig()
    Z = _drop_origin_samples(as_samples(data, G.p), f)
    n = Z.shape[0]
    state = {"K": None}

    def step(alpha):
        M = (Z * alpha[:, None]).T @ Z
        K, ok, gmax = _ggm_newton(M, n, G, K0=state["K"], tol=inner_tol)
        if not ok:
            raise MaxIterExceeded(f"inner graphical solver stopped with gradient {gmax:.3g}",
                                  spd_inverse(K))
        state["K"] = K
        return spd_inverse(K), None

    report = _reweighting_loop(Z, f, cfg, step, _initial_scatter(cfg.init, Z))
    report.info["inner"] = "newton"
    return report


def gaussian_graphical_mle(data, G):
    """Gaussian MLE with the concentration restricted to ``G`` (the BG estimator)."""
    Z = as_samples(data, G.p)
    n = Z.shape[0]
    order = find_perfect_elimination_order(G)
    half = np.full(n, 0.5)
    if order is None:
        return solve_weighted_ggm_general(Z, half, G)
    inv = inverse_permutation(order)
    C = solve_weighted_chordal_ggm(Z[:, order], half, permute_pattern(G, order))
    return scatter_from_factor(C)[np.ix_(inv, inv)]


def concentration_gradient(S, data, f, G=None):
    """Gradient of L0 with respect to ``K = S^{-1}``, masked to ``G`` if given.

    ``sum_i u(z_i' K z_i) z_i z_i' - (n/2) S``.
    """
    S = np.asarray(S, dtype=float)
    Z = as_samples(data, S.shape[0])
    alpha = f.u(quadratic_forms(Z, S))
    grad = (Z * alpha[:, None]).T @ Z - 0.5 * Z.shape[0] * S
    if G is not None:
        grad = np.where(G.mask(), grad, 0.0)
    return grad


def _cholesky_grad(C, Z, f, lower_mask):
    W = Z @ C
    q = np.sum(W**2, axis=1)
    alpha = f.u(q)
    grad = 2.0 * (Z * alpha[:, None]).T @ W
    grad[np.diag_indices_from(grad)] -= Z.shape[0] / np.diag(C)
    return np.where(lower_mask, grad, 0.0)


def _project_factor(C, lower_mask):
    C = np.where(lower_mask, C, 0.0)
    d = np.diag(C)
    C[np.diag_indices_from(C)] = np.maximum(d, DIAG_FLOOR)
    return C


def fit_direct_cholesky(data, f, G, cfg=None, *, gtol=1e-9):
    """Minimize the Cholesky-parameterized objective by projected gradient descent.

    Solves ``min sum_i rho(||C' z_i||^2) - n sum_j log C_jj`` over lower
    triangular G-sparse ``C`` with Barzilai-Borwein steps, Armijo
    backtracking and diagonal projection onto ``[1e-10, inf)``. Intended as
    an independent check of :func:`fit_chordal_mm`; it is only well posed
    when ``rho(x**2)`` is convex.

    Raises
    ------
    PreconditionViolation
        If ``f.rho_sq_convex`` is false.
    NotPerfectOrder
        If the natural order of ``G`` is not perfect.
    MaxIterExceeded
        With the last report attached as ``.result``.
    """
    if not f.rho_sq_convex:
        raise PreconditionViolation(
            f"{f.name} loss (beta={f.beta}) is not convex in the Cholesky factor")
    cfg = cfg or FitConfig(max_iter=20000, rel_tol=1e-14)
    Z = as_samples(data, G.p)
    n = Z.shape[0]
    if not is_perfect_elimination_order(G, range(G.p)):
        raise NotPerfectOrder("natural order is not a perfect elimination order")
    lower = G.lower_mask()
    C = _project_factor(cholesky(spd_inverse(_initial_scatter(cfg.init, Z))), lower)
    obj = cholesky_objective(C, Z, f)
    grad = _cholesky_grad(C, Z, f, lower)
    trace = [obj]
    step = 1.0 / max(np.abs(grad).max(), 1.0)
    converged = False
    it = 0
    for it in range(1, int(cfg.max_iter) + 1):
        for _ in range(80):
            C_try = _project_factor(C - step * grad, lower)
            obj_try = cholesky_objective(C_try, Z, f)
            if obj_try <= obj - 1e-4 * np.sum(grad * (C - C_try)):
                break
            step *= 0.5
        else:
            converged = True  # no descent possible at machine precision
            break
        grad_new = _cholesky_grad(C_try, Z, f, lower)
        s = C_try - C
        y = grad_new - grad
        sy = float(np.sum(s * y))
        step = float(np.sum(s * s)) / sy if sy > 0 else step * 2.0
        rel_obj = abs(obj - obj_try) / max(abs(obj), 1.0)
        C, obj, grad = C_try, obj_try, grad_new
        trace.append(obj)
        pg = np.where(np.eye(G.p, dtype=bool) & (C <= DIAG_FLOOR), np.minimum(grad, 0.0), grad)
        if np.abs(pg).max() < gtol * n or rel_obj < cfg.rel_tol:
            converged = True
            break
    report = FitReport(scatter_from_factor(C), C, trace, it, converged)
    if not converged:
        raise MaxIterExceeded("direct Cholesky solver did not converge", report)
    return report


def _soft_threshold(X, t):
    return np.sign(X) * np.maximum(np.abs(X) - t, 0.0)


def _l1_prox(V, t, lam, n):
    """Prox of ``t * (lam ||C||_1 - n sum_j log C_jj)`` on lower-triangular ``V``."""
    C = np.tril(_soft_threshold(V, t * lam), -1)
    v = np.diag(V) - t * lam
    C[np.diag_indices_from(C)] = 0.5 * (v + np.sqrt(v**2 + 4.0 * t * n))
    return C


def l1_objective(C, data, f, lam):
    return cholesky_objective(C, data, f) + lam * float(np.abs(C).sum())


def fit_l1_cholesky(data, f, lam, cfg=None):
    """L1-penalized estimate of the concentration's Cholesky factor.

    Minimizes ``sum_i rho(||C' z_i||^2) - n sum_j log C_jj + lam ||C||_1``
    over lower-triangular ``C`` in the given variable order by proximal
    gradient with backtracking. The log-barrier on the diagonal is folded
    into the proximal map, which keeps the diagonal strictly positive.
    """
    if lam < 0:
        raise ValueError(f"penalty must be nonnegative, got {lam}")
    if not f.rho_sq_convex:
        raise PreconditionViolation(
            f"{f.name} loss (beta={f.beta}) is not convex in the Cholesky factor")
    cfg = cfg or FitConfig(max_iter=20000, rel_tol=1e-10)
    Z = as_samples(data)
    n, p = Z.shape
    full = np.tril(np.ones((p, p), dtype=bool))

    def smooth(C):
        return float(np.sum(f.rho(np.sum((Z @ C) ** 2, axis=1))))

    def smooth_grad(C):
        W = Z @ C
        alpha = f.u(np.sum(W**2, axis=1))
        return np.tril(2.0 * (Z * alpha[:, None]).T @ W)

    C = _project_factor(cholesky(spd_inverse(_initial_scatter(cfg.init, Z))), full)
    g_val, grad = smooth(C), smooth_grad(C)
    trace = [l1_objective(C, Z, f, lam)]
    t = 1.0 / max(np.abs(grad).max(), 1.0)
    converged = False
    it = 0
    for it in range(1, int(cfg.max_iter) + 1):
        for _ in range(80):
            C_new = _l1_prox(C - t * grad, t, lam, n)
            D = C_new - C
            g_new = smooth(C_new)
            if g_new <= g_val + np.sum(grad * D) + np.sum(D * D) / (2.0 * t) + 1e-12 * abs(g_val):
                break
            t *= 0.5
        grad_new = smooth_grad(C_new)
        y = grad_new - grad
        sy = float(np.sum(D * y))
        change = np.linalg.norm(D) / np.linalg.norm(C)
        C, g_val, grad = C_new, g_new, grad_new
        trace.append(l1_objective(C, Z, f, lam))
        if change < cfg.rel_tol:
            converged = True
            break
        t = float(np.sum(D * D)) / sy if sy > 0 else t * 2.0
    report = FitReport(scatter_from_factor(C), C, trace, it, converged)
    if not converged:
        raise MaxIterExceeded("L1 Cholesky solver did not converge", report)
    return report


def joint_objective(mu, S, data, f):
    Z = as_samples(data)
    return neg_log_likelihood(S, Z - np.asarray(mu)[None, :], f)


def fit_chordal_joint_mean(data, f, G, cfg=None):
    """Joint location and chordal-constrained scatter by alternating MM.

    Weights ``u(q_i)`` are computed at the current ``(mu, S)``; the weighted
    mean is then the exact surrogate minimizer in ``mu`` and the scatter
    step solves the weighted graphical model on the recentred data. The
    starting location is the sample mean.

    Returns
    -------
    report : FitReport
    mean : ndarray of shape (p,)
    """
    cfg = cfg or FitConfig()
    Z = as_samples(data, G.p)
    n = Z.shape[0]
    Zo, Go, S, order = _ordered_problem(Z, G, _initial_scatter(cfg.init, Z - Z.mean(axis=0)))
    mu = Zo.mean(axis=0)
    trace = [neg_log_likelihood(S, Zo - mu, f)]
    prev_alpha = None
    converged = False
    iterations = 0
    C = None
    for _ in range(int(cfg.max_iter)):
        alpha = _weights(Zo - mu, S, f, cfg.quad_clamp)
        if prev_alpha is not None and np.array_equal(alpha, prev_alpha):
            converged = True
            break
        mu_new = alpha @ Zo / alpha.sum()
        Zc = Zo - mu_new
        C = _chordal_factor_from_gram((Zc * alpha[:, None]).T @ Zc, n, Go)
        S_new = _normalize_scale(scatter_from_factor(C), f)
        iterations += 1
        trace.append(neg_log_likelihood(S_new, Zc, f))
        change = relative_frobenius(S_new, S) + np.linalg.norm(mu_new - mu) / max(
            np.linalg.norm(mu), np.sqrt(np.trace(S)))
        S, mu, prev_alpha = S_new, mu_new, alpha
        if change < cfg.rel_tol:
            converged = True
            break
    report = _restore_order(FitReport(S, C, trace, iterations, converged), order)
    if order is not None:
        mu = mu[inverse_permutation(order)]
    return report, mu


def sample_second_moment(data):
    Z = as_samples(data)
    return Z.T @ Z / Z.shape[0]


__all__ = [
    "FitConfig", "FitReport", "fit_fixed_point", "solve_weighted_chordal_ggm",
    "fit_chordal_mm", "solve_weighted_ggm_general", "fit_graphical_mm",
    "gaussian_graphical_mle", "fit_direct_cholesky", "fit_l1_cholesky",
    "fit_chordal_joint_mean", "concentration_gradient", "scatter_from_factor",
    "sample_second_moment", "joint_objective", "l1_objective",
]
