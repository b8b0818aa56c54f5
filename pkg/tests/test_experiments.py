import numpy as np
import pytest

from robust_scatter.errors import (
    DataShapeMismatch,
    NotDiagonallyDominant,
    NotPositiveDefinite,
)
from robust_scatter.estimators import gaussian_graphical_mle
from robust_scatter.experiments import (
    ESTIMATORS,
    SONAR_METHODS,
    THREADS_ENV,
    ClassModel,
    LabeledDataset,
    SonarConfig,
    SyntheticSpec,
    exp1_spec,
    exp2_spec,
    exp3_spec,
    fit_class_models,
    grid_precision,
    qda_classify,
    qda_scores,
    run_synthetic,
    select_band,
    sonar_experiment,
    toeplitz_banded_precision,
    worker_count,
)
from robust_scatter.graphs import banded_pattern, grid_pattern, is_g_sparse
from robust_scatter.models import covariance_scale, mggd_sample


class TestGroundTruth:
    def test_toeplitz(self):
        gt = toeplitz_banded_precision(10, 4)
        K = gt.precision
        assert K[0, 0] == 1.0 and K[0, 3] == 0.4 and K[0, 4] == 0.0
        np.testing.assert_allclose(gt.scatter @ K, np.eye(10), atol=1e-12)
        assert is_g_sparse(K, banded_pattern(10, 4))

    def test_toeplitz_not_pd(self):
        with pytest.raises(NotPositiveDefinite):
            toeplitz_banded_precision(10, 4, offdiag=0.9)

    def test_grid(self):
        gt = grid_precision(3, 3)
        np.testing.assert_allclose(gt.precision, np.eye(9) + 0.2 * grid_pattern(3, 3).adjacency())

    def test_grid_dominance(self):
        with pytest.raises(NotDiagonallyDominant):
            grid_precision(3, 3, offdiag=0.25)


class TestSpecs:
    def test_defaults(self):
        s1, s2, s3 = exp1_spec(), exp2_spec(), exp3_spec()
        assert (s1.p, s1.beta, s1.trials) == (10, 0.5, 500)
        assert s2.beta == 0.2 and s2.pattern == s1.pattern
        assert s3.p == 9 and s3.pattern == grid_pattern(3, 3) and s3.trials == 100
        assert list(s1.n_grid) == [20, 40, 60, 80, 100]
        assert tuple(s1.estimators) == ESTIMATORS

    def test_validation(self):
        truth = toeplitz_banded_precision(10, 4).scatter
        with pytest.raises(ValueError):
            SyntheticSpec(10, 0.5, banded_pattern(10, 2), truth, [20], 1)
        with pytest.raises(DataShapeMismatch):
            SyntheticSpec(9, 0.5, banded_pattern(10, 4), truth, [20], 1)
        with pytest.raises(ValueError):
            SyntheticSpec(10, 0.5, banded_pattern(10, 4), truth, [20], 1, estimators=["X"])


@pytest.fixture(scope="module")
def table():
    return run_synthetic(exp1_spec(trials=6, n_grid=(20, 60)), workers=1)


class TestSynthetic:
    def test_rows(self, table):
        names = {r[0] for r in table.rows}
        assert names == set(ESTIMATORS) | {"G_uncorrected", "BG_uncorrected"}
        assert all(r[4] == 6 for r in table.rows)
        assert table.diagnostics["failures"] == []
        assert table.diagnostics["sparsity_violations"] == 0

    def test_gaussian_correction(self):
        # G is the raw second-moment matrix divided by c(beta)
        spec = exp1_spec(trials=1, n_grid=(20,))
        truth = spec.truth
        Z = mggd_sample(20, np.zeros(10), truth, 0.5, 0)
        S = gaussian_graphical_mle(Z, spec.pattern) / covariance_scale(0.5, 10)
        err = np.sum((S - truth) ** 2) / np.sum(truth**2)
        single = run_synthetic(spec, workers=1)
        assert single.lookup("BG", 20)[2] == pytest.approx(err, rel=1e-12)

    def test_trial_data_drawn_at_largest_n(self):
        # each trial draws max(n_grid) rows once; smaller n reuse its leading rows
        small = run_synthetic(exp1_spec(trials=2, n_grid=(20, 40)), workers=1)
        big = run_synthetic(exp1_spec(trials=2, n_grid=(20, 40, 100)), workers=1)
        assert small.lookup("MGGD", 40) != big.lookup("MGGD", 40)
        only = run_synthetic(exp1_spec(trials=2, n_grid=(40,)), workers=1)
        assert only.lookup("MGGD", 40) == small.lookup("MGGD", 40)

    def test_workers_do_not_change_output(self):
        spec = exp1_spec(trials=5, n_grid=(20, 40))
        one = run_synthetic(spec, workers=1)
        two = run_synthetic(spec, workers=2)
        assert one.to_csv() == two.to_csv()

    def test_init_gaps_small(self, table):
        assert max(table.diagnostics["max_init_gap"].values()) < 1e-4

    def test_wide_csv(self, table):
        lines = table.to_wide_csv(ESTIMATORS).splitlines()
        assert lines[0] == "n," + ",".join(ESTIMATORS)
        assert [ln.split(",")[0] for ln in lines[1:]] == ["20", "60"]
        assert float(lines[1].split(",")[3]) == table.lookup("MGGD", 20)[2]

    def test_seed_changes_output(self):
        a = run_synthetic(exp1_spec(trials=2, n_grid=(20,), seed=0), workers=1)
        b = run_synthetic(exp1_spec(trials=2, n_grid=(20,), seed=1), workers=1)
        assert a.to_csv() != b.to_csv()

    def test_grid_sweep_runs(self):
        table = run_synthetic(exp3_spec(trials=2, n_grid=(40,)), workers=1)
        assert table.diagnostics["failures"] == []
        assert table.diagnostics["sparsity_violations"] == 0


class TestWorkerCount:
    def test_env_caps(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "2")
        assert worker_count() == 2
        assert worker_count(8) == 2
        assert worker_count(1) == 1

    def test_default(self, monkeypatch):
        monkeypatch.delenv(THREADS_ENV, raising=False)
        assert worker_count() == 1
        assert worker_count(3) == 3


class TestQDA:
    def _models(self):
        return {"A": ClassModel(np.array([0.0]), np.array([[1.0]]), 0.5),
                "B": ClassModel(np.array([3.0]), np.array([[4.0]]), 0.5)}

    def test_scores_by_hand(self):
        # A: log .5 - (x^2)/2 ; B: log .5 - log 2 - (x - 3)^2 / 8
        s = qda_scores(self._models(), np.array([[1.0], [2.0]]))
        expected = np.log(0.5) + np.array([[-0.5, -np.log(2) - 0.5],
                                           [-2.0, -np.log(2) - 0.125]])
        np.testing.assert_allclose(s, expected, rtol=1e-14)

    def test_classify(self):
        models = self._models()
        assert qda_classify(models, [1.0]) == "A"
        assert qda_classify(models, [2.0]) == "B"
        assert qda_classify(models, [-10.0]) == "B"

    def test_tie_goes_to_first(self):
        m = ClassModel(np.zeros(2), np.eye(2), 0.5)
        assert qda_classify({"R": m, "M": m}, [0.3, 0.1]) == "R"

    def test_prior_shifts_decision(self):
        models = self._models()
        models["A"] = ClassModel(np.array([0.0]), np.array([[1.0]]), 0.01)
        assert qda_classify(models, [1.0]) == "B"


def _toy_sonar(seed=0, n_per=24, p=8):
    rng = np.random.default_rng(seed)
    K = np.eye(p) + 0.4 * (np.eye(p, k=1) + np.eye(p, k=-1))
    S = np.linalg.inv(K)
    X = np.vstack([mggd_sample(n_per, np.zeros(p), S, 0.5, rng),
                   mggd_sample(n_per, np.full(p, 1.0), 2 * S, 0.5, rng)])
    y = np.array(["R"] * n_per + ["M"] * n_per)
    return LabeledDataset(X, y)


class TestSonarProtocol:
    def test_dataset_validation(self):
        with pytest.raises(DataShapeMismatch):
            LabeledDataset(np.ones((3, 2)), np.array(["R", "M"]))

    def test_select_band_prefers_true_band(self):
        rng = np.random.default_rng(1)
        K = np.eye(12) + 0.45 * (np.eye(12, k=1) + np.eye(12, k=-1))
        X = mggd_sample(400, np.zeros(12), np.linalg.inv(K), 1.0, rng)
        band, splits = select_band(X, SonarConfig(bands=range(1, 7), n_splits=4,
                                                  train_fraction=0.5), rng)
        assert band == 2
        assert len(splits) == 4

    def test_class_models(self):
        data = _toy_sonar()
        X = data.features[data.labels == "R"]
        cfg = SonarConfig(bands=(1, 2, 3), betas=(0.5, 1.0), n_splits=3, train_fraction=0.5)
        mu, covs, sel = fit_class_models(X, cfg, np.random.default_rng(0))
        assert set(covs) == set(SONAR_METHODS)
        np.testing.assert_allclose(covs["naive_bayes"], np.diag(np.diag(covs["sample_covariance"])))
        assert sel["band"] in (1, 2, 3) and sel["beta"] in (0.5, 1.0)
        Xc = X - mu
        np.testing.assert_allclose(covs["sample_covariance"], Xc.T @ Xc / len(X))

    def test_experiment_reproducible(self):
        data = _toy_sonar()
        cfg = SonarConfig(bands=(1, 2, 3), betas=(0.5, 1.0), n_splits=3, train_fraction=0.5,
                          folds=[0, 5, 30, 47])
        a = sonar_experiment(data, cfg, workers=1)
        b = sonar_experiment(data, cfg, workers=2)
        assert a.to_csv() == b.to_csv()
        assert [r[0] for r in a.rows] == list(SONAR_METHODS)
        assert all(0.0 <= r[1] <= 1.0 for r in a.rows)
        assert len(a.diagnostics["selections"]) == 4
