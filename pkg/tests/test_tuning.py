import numpy as np
import pytest

from clinpred.errors import ExtrapolationWarning, InvalidSpec, SchemaMismatch
from clinpred.models.estimators import EstimatorSpec, fit_grid, fit_point, predict_grid
from clinpred.models.tuning import TrainControl, predict, select_best, train_tuned
from clinpred.preprocess import BalanceStrategy
from clinpred.resample import ResamplingPlan

from conftest import make_dataset


@pytest.fixture(scope="module")
def small(split):
    return split.train.take(np.arange(400))


@pytest.mark.parametrize("plan", [ResamplingPlan("cv", 5, 1), ResamplingPlan("boot", 6, 2)])
def test_recipe_never_sees_assessment_rows(small, plan):
    ctrl = TrainControl(plan=plan, balance=BalanceStrategy("smote", k=5), seed=4)
    res = train_tuned(small, EstimatorSpec("lasso", ({"lambda": 0.01}, {"lambda": 0.05})), ctrl)
    assert len(res.audit) == len(plan.expand(small.n_rows))
    for entry in res.audit:
        fit_ids = set(entry.recipe_fit_ids.tolist())
        assert fit_ids <= set(entry.analysis_ids.tolist())
        assert fit_ids.isdisjoint(entry.assessment_ids.tolist())


def test_results_do_not_depend_on_threads(small):
    spec = EstimatorSpec("rf", ({"mtry": 2, "n_trees": 15}, {"mtry": 4, "n_trees": 15}))
    runs = [
        train_tuned(small, spec, TrainControl(plan=ResamplingPlan("cv", 4, 3), threads=t))
        for t in (1, 3)
    ]
    assert np.array_equal(runs[0].table, runs[1].table)
    assert np.array_equal(runs[0].holdout, runs[1].holdout, equal_nan=True)
    assert np.array_equal(runs[0].summary, runs[1].summary)


def test_holdout_covers_every_cv_row(small):
    res = train_tuned(small, EstimatorSpec("glm"), TrainControl(plan=ResamplingPlan("cv", 5, 1)))
    assert np.isfinite(res.holdout).all()
    assert res.summary.shape == (1, 3)
    assert set(res.extra) == {"Sens", "Spec"}


def test_tie_break_prefers_simplest_point():
    grid = ({"lambda": 0.01}, {"lambda": 0.1}, {"lambda": 0.001})
    assert select_best("lasso", grid, [0.8, 0.8, 0.8], "ROC") == 1
    assert select_best("lasso", grid, [0.8, 0.7, 0.9], "ROC") == 2
    assert select_best("knn", ({"k": 9}, {"k": 3}), [1.0, 1.0], "RMSE") == 1
    assert select_best("glm", ({},), [np.nan], "ROC") == 0


def test_penalized_path_matches_separate_fits():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(150, 5))
    y = (X @ [1, -1, 0.5, 0, 0] + rng.normal(size=150) > 0).astype(float)
    kinds = ["continuous"] * 5
    grid = [{"alpha": 0.5, "lambda": v} for v in (0.1, 0.03, 0.01)]
    path = predict_grid(fit_grid("enet", X, y, kinds, "classification", grid), X)
    for p, point in zip(path, grid):
        single = fit_point("enet", X, y, kinds, "classification", point).predict(X)
        np.testing.assert_allclose(p, single, atol=1e-5)


def test_regression_rejects_classification_only_algorithms():
    X = np.random.default_rng(1).normal(size=(30, 2))
    for alg in ("nb", "gbm"):
        with pytest.raises(InvalidSpec):
            fit_point(alg, X, X[:, 0], ["continuous"] * 2, "regression")
    with pytest.raises(InvalidSpec):
        EstimatorSpec("svm")
    with pytest.raises(InvalidSpec):
        EstimatorSpec("ridge", ({"lambda": -1.0},))


def test_predict_flags_imputes_and_checks_schema(small, split):
    res = train_tuned(small, EstimatorSpec("glm"), TrainControl(plan=ResamplingPlan("cv", 3, 1)))
    model = res.best
    test = split.test.take(np.arange(20))
    j = test.index("KPS")
    values, missing = test.values.copy(), test.missing.copy()
    values[0, j], missing[0, j] = np.nan, True
    values[1, j] = model.feature_ranges["KPS"][1] + 50
    ds = test.with_values(values, missing)
    with pytest.warns(ExtrapolationWarning):
        pred = predict(model, ds)
    assert pred.imputed[0] == ("KPS",)
    assert "KPS" in pred.flags[1]
    assert not pred.flags[0]
    np.testing.assert_allclose(pred.probabilities.sum(1), 1)
    assert np.array_equal(pred.labels, (pred.values > model.cutoff).astype(int))
    with pytest.raises(SchemaMismatch, match="KPS"):
        predict(model, ds.drop(["KPS"]))


def test_regression_endpoint_refuses_rebalancing():
    rng = np.random.default_rng(2)
    ds = make_dataset(rng.normal(size=(50, 2)), rng.normal(size=50), mode="regression")
    with pytest.raises(InvalidSpec):
        train_tuned(ds, EstimatorSpec("glm"), TrainControl(balance=BalanceStrategy("up")))
    with pytest.raises(InvalidSpec):
        train_tuned(ds, EstimatorSpec("glm"), TrainControl(metric="ROC"))
