"""Monte-Carlo harness, ground-truth models and the SONAR classification study.

Trials are independent given ``seed + trial`` and are merged in trial order,
so a sweep gives identical numbers whether it runs in one process or many.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import csv
import io
import logging
import os
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import (
    DataShapeMismatch,
    NotDiagonallyDominant,
    NotPositiveDefinite,
    RobustScatterError,
)
from .estimators import (
    FitConfig,
    fit_fixed_point,
    fit_graphical_mm,
    gaussian_graphical_mle,
    sample_second_moment,
)
from .graphs import SparsityPattern, banded_pattern, grid_pattern, is_g_sparse
from .models import covariance_scale, mggd_log_density, mggd_rho, mggd_sample
from .spd import cholesky, normalized_sq_frobenius_error, relative_frobenius, spd_inverse

logger = logging.getLogger(__name__)

ESTIMATORS = ("G", "BG", "MGGD", "BMGGD_identity_init", "BMGGD_truth_init")
THREADS_ENV = "ROBUST_SCATTER_THREADS"


class GroundTruth(NamedTuple):
    scatter: np.ndarray
    precision: np.ndarray


def toeplitz_banded_precision(p, width, diag=1.0, offdiag=0.4):
    """Banded Toeplitz concentration and the scatter it induces.

    ``K[i, i] = diag`` and ``K[i, j] = offdiag`` for ``0 < |i - j| < width``.
    """
    lag = np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
    K = np.where(lag == 0, diag, np.where(lag < width, offdiag, 0.0)).astype(float)
    try:
        cholesky(K)
    except NotPositiveDefinite:
        raise NotPositiveDefinite(
            f"Toeplitz band (diag={diag}, offdiag={offdiag}, width={width}) "
            "is not positive definite") from None
    return GroundTruth(spd_inverse(K), K)


def grid_precision(rows, cols, offdiag=0.2):
    """``I + offdiag * A`` for the grid adjacency ``A``; must be diagonally dominant."""
    G = grid_pattern(rows, cols)
    A = G.adjacency()
    degree = A.sum(axis=1).max()
    if abs(offdiag) * degree >= 1.0:
        raise NotDiagonallyDominant(
            f"|offdiag| * max degree = {abs(offdiag) * degree:g} >= 1")
    K = np.eye(G.p) + offdiag * A
    return GroundTruth(spd_inverse(K), K)


@dataclass
class SyntheticSpec:
    p: int
    beta: float
    pattern: SparsityPattern
    truth: np.ndarray
    n_grid: Sequence[int]
    trials: int
    estimators: Sequence[str] = ESTIMATORS
    seed: int = 0
    max_iter: int = 30

    def __post_init__(self):
        self.truth = np.asarray(self.truth, dtype=float)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.pattern.p != self.p or self.truth.shape != (self.p, self.p):
            raise DataShapeMismatch("pattern, truth and p disagree")
        if not is_g_sparse(spd_inverse(self.truth), self.pattern, tol=1e-12):
            raise ValueError("true concentration is not sparse on the pattern")
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown:
            raise ValueError(f"unknown estimators {sorted(unknown)}")


def exp1_spec(trials=500, seed=0, n_grid=(20, 40, 60, 80, 100), beta=0.5):
    p, width = 10, 4
    truth = toeplitz_banded_precision(p, width, 1.0, 0.4).scatter
    return SyntheticSpec(p, beta, banded_pattern(p, width), truth, list(n_grid), trials, seed=seed)


def exp2_spec(trials=500, seed=0, n_grid=(20, 40, 60, 80, 100)):
    return exp1_spec(trials, seed, n_grid, beta=0.2)


def exp3_spec(trials=100, seed=0, n_grid=(20, 40, 60, 80, 100), offdiag=0.2):
    truth = grid_precision(3, 3, offdiag).scatter
    return SyntheticSpec(9, 0.5, grid_pattern(3, 3), truth, list(n_grid), trials, seed=seed)


@dataclass
class ResultTable:
    """Rows of ``(estimator, n, mean_error, stderr, trials)`` or ``(method, loo_error)``."""

    columns: tuple
    rows: list
    diagnostics: dict = field(default_factory=dict)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def to_wide_csv(self, names=None):
        """One row per sample size, one mean-error column per estimator."""
        names = list(dict.fromkeys(r[0] for r in self.rows)) if names is None else list(names)
        ns = list(dict.fromkeys(r[1] for r in self.rows))
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", *names])
        for n in ns:
            writer.writerow([n, *(_fmt(self.lookup(name, n)[2]) for name in names)])
        return buf.getvalue()

    def lookup(self, key, n=None):
        for row in self.rows:
            if row[0] == key and (n is None or row[1] == n):
                return row
        raise KeyError((key, n))


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _run_trial(spec, t):
    """Errors of every estimator at every ``n`` for trial ``t``.

    The largest sample is drawn once from ``seed + t`` and smaller ``n`` use
    its leading rows.
    """
    beta, G = spec.beta, spec.pattern
    f = mggd_rho(beta)
    scale = covariance_scale(beta, spec.p)
    cfg = FitConfig(max_iter=spec.max_iter)
    Z_all = mggd_sample(max(spec.n_grid), np.zeros(spec.p), spec.truth, beta, spec.seed + t)
    errors, gaps, failures, violations = {}, {}, [], 0
    for n in spec.n_grid:
        Z = Z_all[:n]
        estimates = {}
        try:
            for name in spec.estimators:
                if name == "G":
                    S = sample_second_moment(Z)
                    estimates["G_uncorrected"] = S
                    estimates["G"] = S / scale
                elif name == "BG":
                    S = gaussian_graphical_mle(Z, G)
                    estimates["BG_uncorrected"] = S
                    estimates["BG"] = S / scale
                elif name == "MGGD":
                    estimates[name] = fit_fixed_point(Z, f, cfg).scatter
                else:
                    init = "identity" if name == "BMGGD_identity_init" else spec.truth
                    cfg_b = FitConfig(max_iter=spec.max_iter, init=init)
                    estimates[name] = fit_graphical_mm(Z, f, G, cfg_b).scatter
        except RobustScatterError as exc:
            failures.append((t, n, type(exc).__name__, str(exc)))
            continue
        for name, S in estimates.items():
            errors[name, n] = normalized_sq_frobenius_error(S, spec.truth)
            if name.startswith("B") and not is_g_sparse(spd_inverse(S), G, tol=1e-8):
                violations += 1
        if "BMGGD_identity_init" in estimates and "BMGGD_truth_init" in estimates:
            gaps[n] = relative_frobenius(estimates["BMGGD_identity_init"],
                                         estimates["BMGGD_truth_init"])
    return errors, gaps, failures, violations


def _run_chunk(args):
    spec, trials = args
    return [_run_trial(spec, t) for t in trials]


def worker_count(workers=None):
    """Requested worker processes, capped by ``ROBUST_SCATTER_THREADS`` when set."""
    env = os.environ.get(THREADS_ENV)
    cap = max(1, int(env)) if env else None
    if workers is None:
        return cap or 1
    workers = max(1, int(workers))
    return min(workers, cap) if cap else workers


def run_synthetic(spec, workers=None):
    """Monte-Carlo sweep over ``spec.n_grid`` and ``spec.trials``.

    Gaussian estimators (G, BG) target ``c(beta) * scatter`` and are divided
    by ``c(beta)`` before comparison; their raw versions are reported as
    ``G_uncorrected`` and ``BG_uncorrected``. Failed fits are collected in
    ``diagnostics["failures"]`` instead of aborting the sweep.
    """
    workers = worker_count(workers)
    trials = list(range(spec.trials))
    if workers == 1:
        per_trial = _run_chunk((spec, trials))
    else:
        chunks = [trials[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [(spec, c) for c in chunks]))
        by_trial = {}
        for chunk, part in zip(chunks, parts):
            by_trial.update(zip(chunk, part))
        per_trial = [by_trial[t] for t in trials]

    names = list(spec.estimators)
    for name in ("G", "BG"):
        if name in spec.estimators:
            names.append(f"{name}_uncorrected")
    rows = []
    for name in names:
        for n in spec.n_grid:
            vals = np.array([e[name, n] for e, _, _, _ in per_trial if (name, n) in e])
            k = vals.size
            mean = float(vals.mean()) if k else float("nan")
            se = float(vals.std(ddof=1) / np.sqrt(k)) if k > 1 else float("nan")
            rows.append((name, int(n), mean, se, k))
    gaps = {n: [g[n] for _, g, _, _ in per_trial if n in g] for n in spec.n_grid}
    diagnostics = {
        "max_init_gap": {n: (max(v) if v else float("nan")) for n, v in gaps.items()},
        "failures": [f for _, _, fs, _ in per_trial for f in fs],
        "sparsity_violations": int(sum(v for _, _, _, v in per_trial)),
    }
    return ResultTable(("estimator", "n", "mean_error", "stderr", "trials"), rows, diagnostics)


@dataclass
class ClassModel:
    mean: np.ndarray
    covariance: np.ndarray
    prior: float


def qda_scores(class_models, X):
    """Discriminant ``log prior - log det(cov)/2 - Mahalanobis/2`` for each class.

    Returns an ``(m, k)`` array for ``m`` points and ``k`` classes.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.empty((X.shape[0], len(class_models)))
    for k, model in enumerate(class_models.values()):
        L = cholesky(model.covariance)
        D = np.linalg.solve(L, (X - model.mean).T)
        out[:, k] = (np.log(model.prior) - np.sum(np.log(np.diag(L)))
                     - 0.5 * np.sum(D**2, axis=0))
    return out


def qda_classify(class_models, x):
    """Label maximizing the quadratic discriminant; ties go to the first class."""
    labels = list(class_models)
    return labels[int(np.argmax(qda_scores(class_models, x)[0]))]


@dataclass
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels)
        if self.features.ndim != 2 or self.labels.shape != (self.features.shape[0],):
            raise DataShapeMismatch("features must be (n, d) with one label per row")


@dataclass
class SonarConfig:
    bands: Sequence[int] = tuple(range(1, 21))
    betas: Sequence[float] = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
    n_splits: int = 10
    train_fraction: float = 1.0 / 3.0
    max_iter: int = 30
    seed: int = 0
    folds: Optional[Sequence[int]] = None


SONAR_METHODS = ("sample_covariance", "naive_bayes", "BG", "BMGGD")


def _splits(n, cfg, rng):
    n_train = max(2, int(round(cfg.train_fraction * n)))
    for _ in range(cfg.n_splits):
        perm = rng.permutation(n)
        yield perm[:n_train], perm[n_train:]


def _gaussian_loglik(X, S):
    return float(np.sum(mggd_log_density(X, np.zeros(X.shape[1]), S, 1.0)))


def select_band(X, cfg, rng):
    """Band width maximizing the summed Gaussian validation log-likelihood."""
    p = X.shape[1]
    bands = [d for d in cfg.bands if d <= p]
    score = np.zeros(len(bands))
    splits = list(_splits(X.shape[0], cfg, rng))
    for tr, va in splits:
        mu = X[tr].mean(axis=0)
        for k, d in enumerate(bands):
            try:
                S = gaussian_graphical_mle(X[tr] - mu, banded_pattern(p, d))
                score[k] += _gaussian_loglik(X[va] - mu, S)
            except RobustScatterError:
                score[k] = -np.inf
    return bands[int(np.argmax(score))], splits


def select_beta(X, band, splits, cfg):
    """MGGD shape maximizing the summed MGGD validation log-likelihood at ``band``."""
    p = X.shape[1]
    G = banded_pattern(p, band)
    fit_cfg = FitConfig(max_iter=cfg.max_iter)
    score = np.zeros(len(cfg.betas))
    for tr, va in splits:
        mu = X[tr].mean(axis=0)
        for k, beta in enumerate(cfg.betas):
            try:
                S = fit_graphical_mm(X[tr] - mu, mggd_rho(beta), G, fit_cfg).scatter
                score[k] += float(np.sum(mggd_log_density(X[va] - mu, np.zeros(p), S, beta)))
            except RobustScatterError:
                score[k] = -np.inf
    return float(cfg.betas[int(np.argmax(score))])


def fit_class_models(X, cfg, rng):
    """Covariance estimates of one class under the four compared methods."""
    p = X.shape[1]
    mu = X.mean(axis=0)
    Xc = X - mu
    S = sample_second_moment(Xc)
    band, splits = select_band(X, cfg, rng)
    beta = select_beta(X, band, splits, cfg)
    G = banded_pattern(p, band)
    scatter = fit_graphical_mm(Xc, mggd_rho(beta), G, FitConfig(max_iter=cfg.max_iter)).scatter
    covs = {
        "sample_covariance": S,
        "naive_bayes": np.diag(np.diag(S)),
        "BG": gaussian_graphical_mle(Xc, G),
        "BMGGD": covariance_scale(beta, p) * scatter,
    }
    return mu, covs, {"band": band, "beta": beta}


def _sonar_fold(args):
    data, cfg, i = args
    keep = np.ones(data.labels.size, dtype=bool)
    keep[i] = False
    X, y = data.features[keep], data.labels[keep]
    classes = list(dict.fromkeys(data.labels.tolist()))
    fitted, chosen = {}, {}
    for c_idx, c in enumerate(classes):
        rng = np.random.default_rng([cfg.seed, i, c_idx])
        mu, covs, sel = fit_class_models(X[y == c], cfg, rng)
        fitted[c] = (mu, covs, np.mean(y == c))
        chosen[c] = sel
    predictions = {}
    for method in SONAR_METHODS:
        models = {c: ClassModel(mu, covs[method], prior) for c, (mu, covs, prior) in fitted.items()}
        try:
            predictions[method] = qda_classify(models, data.features[i])
        except NotPositiveDefinite:
            predictions[method] = None
    return predictions, chosen


def sonar_experiment(data, cfg=None, workers=None):
    """Leave-one-out QDA error for the four covariance estimators.

    For every held-out observation and every class: the class mean is the
    sample mean, the band is chosen by Gaussian validation likelihood over
    random splits, the MGGD shape by MGGD validation likelihood on the same
    splits and band, and the BMGGD covariance is ``c(beta)`` times the
    fitted scatter. Priors are class frequencies.
    """
    cfg = cfg or SonarConfig()
    if data.features.shape[1] != 60 or data.labels.size != 208:
        logger.warning("dataset shape %s differs from SONAR (208, 60)", data.features.shape)
    folds = list(range(data.labels.size)) if cfg.folds is None else list(cfg.folds)
    workers = worker_count(workers)
    tasks = [(data, cfg, i) for i in folds]
    if workers == 1:
        results = [_sonar_fold(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sonar_fold, tasks, chunksize=4))
    rows = []
    for method in SONAR_METHODS:
        wrong = sum(pred[method] != data.labels[i] for i, (pred, _) in zip(folds, results))
        rows.append((method, wrong / len(folds)))
    diagnostics = {"selections": [chosen for _, chosen in results], "folds": folds}
    return ResultTable(("method", "loo_error"), rows, diagnostics)


__all__ = [
    "ESTIMATORS", "GroundTruth", "toeplitz_banded_precision", "grid_precision",
    "SyntheticSpec", "exp1_spec", "exp2_spec", "exp3_spec", "ResultTable",
    "run_synthetic", "ClassModel", "qda_scores", "qda_classify", "LabeledDataset",
    "SonarConfig", "sonar_experiment", "select_band", "select_beta",
]
