import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kmva.data import encode_labels
from kmva.errors import DataError, UsageError
from kmva.pipeline import FitConfig, fit_classifier, fit_regressor
from kmva.predict import (GridPointError, binomial_std, crossval_select, evaluate, fit_ls,
                          predict_scores, predict_wta, wta)
from kmva.toydata import three_arcs


class TestLeastSquares:
    def test_identity_design(self):
        Y = np.array([[1.0, 2.0], [3.0, 4.0]])
        head = fit_ls(np.eye(2), Y, center=False)
        np.testing.assert_allclose(head.W, Y, atol=1e-12)
        np.testing.assert_allclose(predict_scores(head, np.eye(2)), Y, atol=1e-12)

    def test_heavy_ridge_shrinks_to_mean(self, rng):
        X, Y = rng.standard_normal((20, 3)), rng.standard_normal((20, 2))
        head = fit_ls(X, Y, lam=1e12)
        assert np.max(np.abs(head.W)) < 1e-9
        np.testing.assert_allclose(predict_scores(head, X), np.tile(Y.mean(0), (20, 1)), atol=1e-8)

    def test_minimum_norm_solution(self):
        # duplicated column: the weight is split evenly
        X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        y = np.array([2.0, 4.0, 6.0])
        np.testing.assert_allclose(fit_ls(X, y, center=False).W[:, 0], [1.0, 1.0], atol=1e-12)

    def test_errors(self):
        with pytest.raises(DataError):
            fit_ls(np.eye(3), np.eye(2))
        with pytest.raises(UsageError):
            fit_ls(np.eye(2), np.eye(2), lam=-1)
        with pytest.raises(UsageError):
            fit_ls(np.eye(2), np.eye(2), classes=[0, 1, 2])
        with pytest.raises(DataError):
            predict_scores(fit_ls(np.eye(2), np.eye(2)), np.eye(3))


class TestWTA:
    def test_argmax(self):
        np.testing.assert_array_equal(wta([[0.1, 0.7, 0.2], [0.5, 0.4, 0.1]]), [1, 0])

    def test_tie_goes_to_lowest(self):
        np.testing.assert_array_equal(wta([[0.3, 0.3, 0.1], [0.0, 0.2, 0.2]]), [0, 1])

    def test_predict_wta_decodes_classes(self):
        enc = encode_labels(np.array(["b", "a", "b", "a"]))
        head = fit_ls(np.array([[1.0], [0.0], [1.0], [0.0]]), enc.matrix, classes=enc.classes)
        assert predict_wta(head, np.array([[1.0], [0.0]])).tolist() == ["b", "a"]

    def test_regression_head_refused(self):
        with pytest.raises(UsageError):
            predict_wta(fit_ls(np.eye(2), np.eye(2)), np.eye(2))


class TestEvaluate:
    def test_accuracy_three_of_four(self):
        r = evaluate(np.array([0, 1, 1, 0]), np.array([0, 1, 1, 1]))
        assert r.value == 75.0
        assert r.std == pytest.approx(21.65, abs=0.005)
        assert r.breakdown == {0: 100.0, 1: pytest.approx(200 / 3)}

    def test_binomial_std(self):
        assert binomial_std(75.0, 4) == pytest.approx(np.sqrt(75 * 25 / 4))
        assert binomial_std(100.0, 10) == 0.0

    def test_mse_perfect_and_mean(self, rng):
        Y = rng.standard_normal((30, 2))
        assert evaluate(Y, Y, "MSE").value == 0.0
        mean = np.tile(Y.mean(0), (30, 1))
        assert evaluate(mean, Y, "MSE").value == pytest.approx(Y.var(axis=0).mean(), rel=1e-12)
        assert evaluate(mean, Y, "RMSE").breakdown[1] == pytest.approx(Y[:, 1].std(), rel=1e-12)

    def test_errors(self):
        with pytest.raises(DataError):
            evaluate(np.array([0, 1]), np.array([0]))
        with pytest.raises(UsageError):
            evaluate(np.array([0]), np.array([0]), "AUC")
        with pytest.raises(DataError):
            evaluate(np.empty(0), np.empty(0))
        with pytest.raises(DataError):
            evaluate(np.ones((2, 2)), np.ones((2, 3)), "MSE")

    @settings(max_examples=25)
    @given(st.integers(0, 10 ** 6))
    def test_accuracy_invariant_under_monotone_score_map(self, seed):
        rng = np.random.default_rng(seed)
        S = rng.standard_normal((15, 3))
        truth = rng.integers(0, 3, 15)
        a = evaluate(wta(S), truth).value
        assert evaluate(wta(np.exp(2 * S) + 5), truth).value == a
        assert 0.0 <= a <= 100.0


class TestCrossval:
    FOLDS = [(np.arange(5), np.arange(5, 10)), (np.arange(5, 10), np.arange(5))]

    def test_dominant_point(self):
        r = crossval_select([1, 2, 3], lambda p, tr, va: -abs(p - 2), self.FOLDS)
        assert r.best == 2 and r.best_score == 0.0
        assert r.scores.shape == (3, 2)

    def test_minimize(self):
        r = crossval_select([1, 2, 3], lambda p, tr, va: (p - 3) ** 2, self.FOLDS, maximize=False)
        assert r.best == 3

    def test_singleton(self):
        assert crossval_select([{"eta": 0.1}], lambda p, tr, va: 1.0, self.FOLDS).best == {"eta": 0.1}

    def test_tie_keeps_first(self):
        assert crossval_select(["a", "b"], lambda p, tr, va: 7.0, self.FOLDS).best == "a"

    def test_fold_indices_passed(self):
        seen = []
        crossval_select([0], lambda p, tr, va: seen.append((tr[0], va[0])) or 0.0, self.FOLDS)
        assert seen == [(0, 5), (5, 0)]

    def test_failure_names_grid_point(self):
        def boom(p, tr, va):
            if p == 2:
                raise np.linalg.LinAlgError("singular")
            return 1.0

        with pytest.raises(GridPointError, match="grid point 2") as info:
            crossval_select([1, 2], boom, self.FOLDS)
        assert info.value.params == 2

    def test_errors(self):
        with pytest.raises(UsageError):
            crossval_select([], lambda *a: 0.0, self.FOLDS)
        with pytest.raises(UsageError):
            crossval_select([1], lambda *a: 0.0, [])


class TestPipeline:
    def test_opls_lowest_training_error(self):
        ds = three_arcs(60, seed=1)
        Y = encode_labels(ds.labels).matrix
        mse = {}
        for method in ("pca", "pls2", "cca", "opls"):
            p = fit_regressor(FitConfig(method, 2), ds.X, Y)
            mse[method] = evaluate(p.predict(ds.X), Y, "MSE").value
        assert mse["opls"] <= min(mse.values()) + 1e-12

    def test_classifier_returns_original_labels(self):
        ds = three_arcs(30, seed=2)
        labels = np.array(["x", "y", "z"])[ds.labels]
        p = fit_classifier(FitConfig("kopls", 2), ds.X, labels)
        pred = p.predict(ds.X)
        assert set(pred.tolist()) <= {"x", "y", "z"}
        assert evaluate(pred, labels).value > 80

    def test_unknown_method(self):
        with pytest.raises(UsageError, match="valid"):
            FitConfig("lda")
