"""Forest and boosting behavior: accuracy, calibration shape, determinism."""

from __future__ import annotations

import numpy as np
import pytest

from attentrack.trees import (
    EnsembleModel,
    ForestParams,
    GbmParams,
    TreeError,
    balanced_weights,
    fit_forest,
    fit_gbm,
    multinomial_deviance,
    softmax_rows,
)


def separable(n=400, d=5, k=2, seed=0, margin=0.5):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    if k == 2:
        y = (X[:, 0] + 0.5 * X[:, 1] > 0).astype(int)
    else:
        y = np.digitize(X[:, 0], np.quantile(X[:, 0], np.linspace(0, 1, k + 1)[1:-1]))
    return X, y


class TestBalancedWeights:
    def test_matches_closed_form(self):
        y = np.array([0, 0, 0, 1])
        w = balanced_weights(y, 2)
        # n / (k * n_c): 4/(2*3) for class 0, 4/(2*1) for class 1
        np.testing.assert_allclose(w, [2 / 3, 2 / 3, 2 / 3, 2.0])

    def test_total_weight_equals_n(self):
        rng = np.random.default_rng(0)
        y = rng.integers(0, 3, size=50)
        w = balanced_weights(y, 3)
        assert w.sum() == pytest.approx(50.0)

    def test_absent_class_rejected(self):
        with pytest.raises(TreeError):
            balanced_weights(np.array([0, 0, 0]), 2)


class TestSoftmaxDeviance:
    def test_softmax_rows_sum_to_one(self):
        raw = np.array([[0.0, 1.0, -1.0], [100.0, 100.0, 100.0]])
        p = softmax_rows(raw)
        np.testing.assert_allclose(p.sum(axis=1), 1.0)
        assert np.isfinite(p).all()

    def test_deviance_is_mean_nll(self):
        raw = np.log(np.array([[0.8, 0.2], [0.3, 0.7]]))
        y = np.array([0, 1])
        expected = -(np.log(0.8) + np.log(0.7)) / 2
        assert multinomial_deviance(raw, y) == pytest.approx(expected)


class TestForest:
    def test_separable_training_accuracy(self):
        X, y = separable()
        model = fit_forest(X, y, ForestParams(n_estimators=20, seed=1))
        acc = (model.predict(X) == y).mean()
        assert acc >= 0.99
        assert len(model.trees) == 20

    def test_proba_rows_sum_to_one(self):
        X, y = separable(n=150, k=3)
        model = fit_forest(X, y, ForestParams(n_estimators=10, seed=3))
        proba = model.predict_proba(X)
        assert proba.shape == (150, 3)
        np.testing.assert_allclose(proba.sum(axis=1), 1.0)

    def test_deterministic_given_seed(self):
        X, y = separable(n=120)
        a = fit_forest(X, y, ForestParams(n_estimators=5, seed=11))
        b = fit_forest(X, y, ForestParams(n_estimators=5, seed=11))
        np.testing.assert_array_equal(a.predict_proba(X), b.predict_proba(X))
        c = fit_forest(X, y, ForestParams(n_estimators=5, seed=12))
        assert not np.array_equal(a.predict_proba(X), c.predict_proba(X))

    def test_trees_differ_across_ensemble(self):
        X, y = separable(n=120)
        model = fit_forest(X, y, ForestParams(n_estimators=6, seed=2))
        sigs = {(int(t.feature[0]), round(float(t.threshold[0]), 12)) for t in model.trees}
        assert len(sigs) > 1

    def test_original_class_ids_preserved(self):
        X, _ = separable(n=90)
        y = np.where(X[:, 0] > 0, 7, 3)
        model = fit_forest(X, y, ForestParams(n_estimators=5, seed=4))
        assert set(np.unique(model.predict(X))) <= {3, 7}
        assert model.class_ids == (3, 7)

    def test_single_class_rejected(self):
        X = np.ones((10, 2))
        with pytest.raises(TreeError):
            fit_forest(X, np.zeros(10, dtype=int), ForestParams(n_estimators=2))

    def test_serialization_round_trip(self, tmp_path):
        X, y = separable(n=80)
        model = fit_forest(X, y, ForestParams(n_estimators=4, max_depth=4, seed=5))
        p = tmp_path / "model.json"
        model.save(p)
        back = EnsembleModel.load(p)
        np.testing.assert_allclose(model.predict_proba(X), back.predict_proba(X))
        assert back.kind == "forest"
        assert back.params == model.params


class TestGbm:
    def test_separable_training_accuracy_and_deviance(self):
        X, y = separable()
        model = fit_gbm(X, y, GbmParams(n_estimators=30, seed=1))
        acc = (model.predict(X) == y).mean()
        assert acc >= 0.99
        path = model.deviance_path
        assert len(path) == 31
        assert path[-1] < path[0]
        assert all(b < a + 1e-12 for a, b in zip(path, path[1:]))

    def test_binary_uses_one_tree_per_stage(self):
        X, y = separable(n=100)
        model = fit_gbm(X, y, GbmParams(n_estimators=7, seed=2))
        assert len(model.stages) == 7
        assert all(len(s) == 1 for s in model.stages)

    def test_multiclass_uses_k_trees_per_stage(self):
        X, y = separable(n=150, k=3)
        model = fit_gbm(X, y, GbmParams(n_estimators=5, seed=2))
        assert len(model.stages) == 5
        assert all(len(s) == 3 for s in model.stages)
        proba = model.predict_proba(X)
        np.testing.assert_allclose(proba.sum(axis=1), 1.0)

    def test_prior_initialization(self):
        X, y = separable(n=200)
        model = fit_gbm(X, y, GbmParams(n_estimators=1, seed=0))
        prior = np.bincount(y, minlength=2) / len(y)
        np.testing.assert_allclose(model.init_raw, np.log(prior), atol=1e-12)

    def test_learning_rate_scales_progress(self):
        X, y = separable(n=200, seed=3)
        fast = fit_gbm(X, y, GbmParams(n_estimators=10, learning_rate=0.5, seed=4))
        slow = fit_gbm(X, y, GbmParams(n_estimators=10, learning_rate=0.01, seed=4))
        assert fast.deviance_path[-1] < slow.deviance_path[-1]

    def test_subsample_deterministic(self):
        X, y = separable(n=200, seed=5)
        p = GbmParams(n_estimators=8, subsample=0.6, seed=9)
        a = fit_gbm(X, y, p)
        b = fit_gbm(X, y, p)
        np.testing.assert_array_equal(a.predict_proba(X), b.predict_proba(X))

    def test_serialization_round_trip(self, tmp_path):
        X, y = separable(n=120, k=3)
        model = fit_gbm(X, y, GbmParams(n_estimators=4, seed=6))
        p = tmp_path / "model.json"
        model.save(p)
        back = EnsembleModel.load(p)
        np.testing.assert_allclose(model.predict_proba(X), back.predict_proba(X))
        assert back.kind == "gbm"
        np.testing.assert_allclose(back.deviance_path, model.deviance_path)

    def test_invalid_params(self):
        with pytest.raises(TreeError):
            GbmParams(learning_rate=0.0)
        with pytest.raises(TreeError):
            GbmParams(subsample=0.0)
        with pytest.raises(TreeError):
            GbmParams(subsample=1.5)
        with pytest.raises(TreeError):
            ForestParams(n_estimators=0)
