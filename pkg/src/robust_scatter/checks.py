"""Randomized invariant suites.

Each suite returns a :class:`CheckResult`; ``selftest`` runs them all and the
acceptance tests run them at full size. Every suite draws from its own seeded
generator, so results are reproducible.
"""

from dataclasses import dataclass, field
import time

import numpy as np

from .errors import NonChordalPattern
from .estimators import (
    FitConfig,
    fit_chordal_mm,
    fit_fixed_point,
    fit_graphical_mm,
    gaussian_graphical_mle,
    sample_second_moment,
    scatter_from_factor,
    solve_weighted_chordal_ggm,
    solve_weighted_ggm_general,
)
from .experiments import toeplitz_banded_precision
from .graphs import (
    SparsityPattern,
    banded_pattern,
    find_perfect_elimination_order,
    grid_pattern,
    inverse_permutation,
    is_g_sparse,
    is_perfect_elimination_order,
    permute_pattern,
    require_perfect_order,
)
from .models import (
    cholesky_objective,
    covariance_scale,
    mggd_rho,
    mggd_sample,
    neg_log_likelihood,
)
from .spd import cholesky, geodesic_point, relative_frobenius


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        extras = ", ".join(f"{k}={_short(v)}" for k, v in self.detail.items())
        return f"{status} {self.name} ({self.seconds:.1f}s) {extras}".rstrip()


def _short(v):
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def random_spd(p, rng, jitter=0.1):
    A = rng.standard_normal((p, p))
    return A @ A.T / p + jitter * np.eye(p)


def random_chordal_pattern(p, rng, density=0.5):
    """Random chordal graph whose natural order is a perfect elimination order.

    Vertices are added from ``p-1`` down to ``0``; each new vertex attaches to
    a random subset of ``{v} | later(v)`` for a random earlier-added ``v``,
    which is a clique by construction.
    """
    later = {p - 1: set()}
    edges = set()
    for j in range(p - 2, -1, -1):
        v = int(rng.integers(j + 1, p))
        clique = sorted({v} | later[v])
        keep = [k for k in clique if rng.random() < density]
        later[j] = set(keep)
        edges.update((j, k) for k in keep)
    return SparsityPattern(p, frozenset(edges))


def random_sparse_factor(G, rng):
    """Lower-triangular factor supported on ``G`` with a diagonal in ``[0.5, 1.5]``."""
    C = np.where(G.lower_mask(), rng.standard_normal((G.p, G.p)), 0.0)
    C[np.diag_indices(G.p)] = rng.uniform(0.5, 1.5, G.p)
    return C


@_timed
def gaussian_reduction(seed=0):
    """``beta = 1`` recovers the Gaussian estimators exactly."""
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((50, 6)) @ cholesky(random_spd(6, rng)).T
    f = mggd_rho(1.0)
    unconstrained = fit_fixed_point(Z, f, FitConfig(max_iter=5))
    err_full = relative_frobenius(unconstrained.scatter, sample_second_moment(Z))
    G = banded_pattern(6, 3)
    mm = fit_chordal_mm(Z, f, G, FitConfig(max_iter=5))
    err_band = relative_frobenius(mm.scatter, gaussian_graphical_mle(Z, G))
    passed = err_full <= 1e-10 and err_band <= 1e-10 and mm.iterations == 1
    return CheckResult("gaussian_reduction", passed, {
        "full_err": err_full, "banded_err": err_band, "mm_iterations": mm.iterations})


@_timed
def geodesic_convexity(tests=1000, betas=(0.25, 0.5, 1.0, 2.0), dims=range(2, 9),
                       slack=1e-9, seed=1):
    """Midpoint convexity of the likelihood along SPD geodesics."""
    rng = np.random.default_rng(seed)
    dims = list(dims)
    violations, worst = 0, -np.inf
    for beta in betas:
        f = mggd_rho(beta)
        for k in range(tests):
            p = dims[k % len(dims)]
            Z = rng.standard_normal((int(rng.integers(p, 3 * p + 1)), p))
            S1, S2 = random_spd(p, rng), random_spd(p, rng)
            l1, l2 = neg_log_likelihood(S1, Z, f), neg_log_likelihood(S2, Z, f)
            mid = neg_log_likelihood(geodesic_point(S1, S2, 0.5), Z, f)
            excess = (mid - 0.5 * (l1 + l2)) / max(1.0, abs(l1), abs(l2))
            worst = max(worst, excess)
            violations += excess > slack
    return CheckResult("geodesic_convexity", violations == 0, {
        "tests": tests * len(betas), "violations": violations, "worst_excess": worst})


def cholesky_midpoint_excess(C1, C2, Z, f):
    """Relative amount by which the Cholesky objective exceeds its chord at the midpoint."""
    a, b = cholesky_objective(C1, Z, f), cholesky_objective(C2, Z, f)
    mid = cholesky_objective(0.5 * (C1 + C2), Z, f)
    return (mid - 0.5 * (a + b)) / max(1.0, abs(a), abs(b))


def cholesky_nonconvex_instance():
    """A ``beta = 0.25`` instance whose Cholesky objective is not midpoint convex.

    With every sample on the first axis the objective along ``C = diag(c, 1)``
    is ``n (0.5 sqrt(c) - log c)`` up to a constant, which is concave for
    ``c > 64``.
    """
    Z = np.tile([1.0, 0.0], (4, 1))
    return np.diag([100.0, 1.0]), np.diag([300.0, 1.0]), Z


@_timed
def cholesky_convexity(tests=1000, betas=(0.5, 1.0, 2.0), slack=1e-9, seed=2):
    """Euclidean midpoint convexity in sparse Cholesky factors, and its failure below 1/2."""
    rng = np.random.default_rng(seed)
    violations, worst = 0, -np.inf
    for beta in betas:
        f = mggd_rho(beta)
        for _ in range(tests):
            p = int(rng.integers(2, 9))
            G = random_chordal_pattern(p, rng)
            Z = rng.standard_normal((int(rng.integers(p, 3 * p + 1)), p))
            excess = cholesky_midpoint_excess(
                random_sparse_factor(G, rng), random_sparse_factor(G, rng), Z, f)
            worst = max(worst, excess)
            violations += excess > slack
    C1, C2, Z = cholesky_nonconvex_instance()
    counter = cholesky_midpoint_excess(C1, C2, Z, mggd_rho(0.25))
    passed = violations == 0 and counter > slack
    return CheckResult("cholesky_convexity", passed, {
        "tests": tests * len(betas), "violations": violations, "worst_excess": worst,
        "beta_0.25_excess": counter})


def _random_chordal_relabeled(p, rng):
    G = random_chordal_pattern(p, rng)
    perm = rng.permutation(p)
    return SparsityPattern(p, frozenset((int(perm[i]), int(perm[j])) for i, j in G.edges))


def closed_form_scatter(Z, w, G):
    """Chordal closed form on any vertex labelling."""
    order = require_perfect_order(G)
    inv = inverse_permutation(order)
    C = solve_weighted_chordal_ggm(Z[:, order], w, permute_pattern(G, order))
    return scatter_from_factor(C)[np.ix_(inv, inv)]


@_timed
def oracle_equivalence(instances=200, complete_every=5, seed=3):
    """Closed-form chordal solver against the general Newton solver."""
    rng = np.random.default_rng(seed)
    worst_general, worst_analytic = 0.0, 0.0
    for k in range(instances):
        p = int(rng.integers(2, 7))
        complete = k % complete_every == 0
        G = SparsityPattern.complete(p) if complete else _random_chordal_relabeled(p, rng)
        n = int(rng.integers(p + 2, 4 * p + 3))
        Z = rng.standard_normal((n, p)) @ cholesky(random_spd(p, rng)).T
        w = rng.uniform(0.1, 2.0, n)
        closed = closed_form_scatter(Z, w, G)
        general = solve_weighted_ggm_general(Z, w, G)
        worst_general = max(worst_general, relative_frobenius(closed, general))
        if complete:
            analytic = (2.0 / n) * (Z * w[:, None]).T @ Z
            worst_analytic = max(worst_analytic, relative_frobenius(closed, analytic),
                                 relative_frobenius(general, analytic))
    passed = worst_general <= 1e-5 and worst_analytic <= 1e-8
    return CheckResult("oracle_equivalence", passed, {
        "instances": instances, "max_closed_vs_general": worst_general,
        "max_vs_analytic": worst_analytic})


def init_independence_harness(beta, pattern, truth, n, trials, seed, max_iter=2000,
                              rel_tol=1e-13, slack=1e-10):
    """Run MM from identity and from the truth on ``trials`` MGGD samples.

    Chordal patterns use the closed-form inner step, others the Newton solver.

    Returns the number of objective increases beyond ``slack`` (relative) and
    the largest relative Frobenius gap between the two estimates.
    """
    f = mggd_rho(beta)
    increases, gap = 0, 0.0
    p = pattern.p
    for t in range(trials):
        Z = mggd_sample(n, np.zeros(p), truth, beta, seed + t)
        fits = [fit_graphical_mm(Z, f, pattern, FitConfig(max_iter, rel_tol, init=init))
                for init in ("identity", truth)]
        for r in fits:
            tr = np.asarray(r.objective_trace)
            increases += int(np.sum(np.diff(tr) > slack * np.maximum(1.0, np.abs(tr[:-1]))))
        gap = max(gap, relative_frobenius(fits[0].scatter, fits[1].scatter))
    return increases, gap


@_timed
def descent_and_init_independence(trials=100, betas=(0.5, 1.0), ns=(40, 100), seed=4):
    """Monotone MM traces and agreement of identity- and truth-initialized fits."""
    truth = toeplitz_banded_precision(10, 4).scatter
    G = banded_pattern(10, 4)
    detail, passed = {}, True
    for beta in betas:
        for n in ns:
            inc, gap = init_independence_harness(beta, G, truth, n, trials, seed)
            detail[f"b{beta}_n{n}_gap"] = gap
            detail[f"b{beta}_n{n}_increases"] = inc
            passed &= inc == 0 and gap <= 1e-6
    return CheckResult("descent_init_independence", passed, detail)


@_timed
def sampler_moments(draws=100_000, betas=(0.5, 1.0), p=5, seed=5):
    """Empirical covariance of the sampler against ``c(beta)`` times the scatter."""
    rng = np.random.default_rng(seed)
    S = random_spd(p, rng) + np.eye(p)
    detail = {"c1_exact": all(covariance_scale(1.0, q) == 1.0 for q in range(1, 30))}
    passed = detail["c1_exact"]
    for beta in betas:
        X = mggd_sample(draws, np.zeros(p), S, beta, rng)
        err = relative_frobenius(X.T @ X / draws, covariance_scale(beta, p) * S)
        detail[f"cov_err_b{beta}"] = err
        passed &= err <= 0.05
    X = mggd_sample(draws, np.zeros(p), np.eye(p), 1.0, rng)
    radial = float(np.mean(np.sum(X**2, axis=1)))
    detail["radial_rel_err"] = abs(radial - p) / p
    passed &= detail["radial_rel_err"] <= 0.02
    return CheckResult("sampler_moments", bool(passed), detail)


@_timed
def chordal_structure(per_p=100, dims=range(3, 13), seed=6):
    """Fill-free factorization and product on chordal patterns, and non-chordal detection."""
    rng = np.random.default_rng(seed)
    factor_fail = product_fail = order_fail = 0
    for p in dims:
        for _ in range(per_p):
            G = random_chordal_pattern(p, rng)
            # diagonally dominant G-sparse SPD matrix: its factor must not fill in
            K = np.where(G.mask(), rng.standard_normal((p, p)), 0.0)
            K = 0.5 * (K + K.T)
            K[np.diag_indices(p)] = np.abs(K).sum(axis=1) + 1.0
            L = cholesky(K)
            factor_fail += not is_g_sparse(np.tril(L, -1) + np.tril(L, -1).T, G, tol=1e-12)
            C = random_sparse_factor(G, rng)
            product_fail += not is_g_sparse(C @ C.T, G, tol=1e-12)
            relabeled = permute_pattern(G, list(rng.permutation(p)))
            order = find_perfect_elimination_order(relabeled)
            order_fail += order is None or not is_perfect_elimination_order(relabeled, order)
    bands_ok = all(find_perfect_elimination_order(banded_pattern(p, d)) == list(range(p))
                   for p in range(1, 13) for d in range(1, p + 1))
    cycle = SparsityPattern(4, frozenset({(0, 1), (1, 2), (2, 3), (0, 3)}))
    rejected = 0
    for G in (cycle, grid_pattern(3, 3)):
        try:
            require_perfect_order(G)
        except NonChordalPattern:
            rejected += 1
    passed = factor_fail == product_fail == order_fail == 0 and bands_ok and rejected == 2
    return CheckResult("chordal_structure", passed, {
        "instances": per_p * len(list(dims)), "factor_failures": factor_fail,
        "product_failures": product_fail, "order_failures": order_fail,
        "banded_natural": bands_ok, "non_chordal_rejected": rejected})


SUITES = {
    "gaussian_reduction": gaussian_reduction,
    "geodesic_convexity": geodesic_convexity,
    "cholesky_convexity": cholesky_convexity,
    "oracle_equivalence": oracle_equivalence,
    "descent_init_independence": descent_and_init_independence,
    "sampler_moments": sampler_moments,
    "chordal_structure": chordal_structure,
}


def run_all(names=None):
    names = list(SUITES) if names is None else list(names)
    return [SUITES[name]() for name in names]


__all__ = ["CheckResult", "SUITES", "run_all", "random_chordal_pattern",
           "random_sparse_factor", "random_spd", "cholesky_nonconvex_instance",
           "init_independence_harness", "closed_form_scatter"]
