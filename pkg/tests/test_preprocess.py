import warnings

import numpy as np
import pytest

from clinpred.data import ColumnSpec, Dataset
from clinpred.errors import (
    ConstantColumnWarning,
    NonContinuousColumn,
    SchemaMismatch,
    SmoteTooFewMinority,
    TooFewDonors,
    UnknownLevel,
    UnknownLevelWarning,
)
from clinpred.preprocess import (
    BalanceStrategy,
    RecipeConfig,
    apply_one_hot,
    apply_recipe,
    apply_scaler,
    fit_knn_imputer,
    fit_recipe,
    fit_scaler,
    gower_distances,
    impute,
    one_hot_encode,
    rebalance,
)

from conftest import make_dataset


def test_zscore_uses_training_statistics():
    rng = np.random.default_rng(0)
    train = make_dataset(rng.normal(5, 2, (100, 2)), rng.integers(0, 2, 100))
    test = make_dataset(rng.normal(5, 2, (30, 2)), rng.integers(0, 2, 30))
    s = fit_scaler(train)
    X = apply_scaler(s, train).feature_matrix()[0]
    np.testing.assert_allclose(X.mean(0), 0, atol=1e-12)
    np.testing.assert_allclose(X.std(0, ddof=1), 1, atol=1e-12)
    Xt = apply_scaler(s, test).feature_matrix()[0]
    raw = test.feature_matrix()[0]
    np.testing.assert_allclose(Xt, (raw - s.center) / s.scale)


def test_scaler_constant_column_and_kind_checks():
    train = make_dataset(np.column_stack([np.ones(10), np.arange(10.0)]), np.arange(10) % 2)
    with pytest.warns(ConstantColumnWarning):
        s = fit_scaler(train)
    assert s.constant == (True, False)
    binary = make_dataset(np.arange(10)[:, None] % 2, np.arange(10) % 2, kinds=["binary"])
    with pytest.raises(NonContinuousColumn):
        fit_scaler(binary, cols=["x0"])


def test_one_hot_and_unknown_levels():
    X = np.array([[1.0], [2.0], [3.0], [2.0]])
    ds = make_dataset(X, [0, 1, 0, 1], kinds=["categorical"])
    enc, m = one_hot_encode(ds, "x0")
    assert m.names == ("x0=1", "x0=2", "x0=3")
    assert enc.feature_matrix()[0].tolist() == [[1, 0, 0], [0, 1, 0], [0, 0, 1], [0, 1, 0]]
    new = make_dataset(np.array([[4.0], [1.0]]), [0, 1], kinds=["categorical"])
    with pytest.warns(UnknownLevelWarning):
        out, flagged = apply_one_hot(m, new)
    assert flagged.tolist() == [0]
    assert out.feature_matrix()[0][0].tolist() == [0, 0, 0]
    with pytest.raises(UnknownLevel):
        apply_one_hot(m, new, strict=True)


def test_gower_matches_definition():
    A = np.array([[0.0, 1.0, 2.0]])
    B = np.array([[1.0, 1.0, 3.0], [0.0, 0.0, 2.0]])
    kinds = ["continuous", "binary", "categorical"]
    scale = np.array([2.0, 1.0, 1.0])
    d = gower_distances(A, B, kinds, scale)
    np.testing.assert_allclose(d, [[(0.25 + 0 + 1) / 3, (0 + 1 + 0) / 3]])


def _brute_impute(ref, ref_miss, q, q_miss, kinds, scale, k):
    out = q.copy()
    dists = []
    for r in range(ref.shape[0]):
        both = ~ref_miss[r] & ~q_miss
        if not both.any():
            dists.append(np.inf)
            continue
        tot = 0.0
        for j in np.flatnonzero(both):
            diff = ref[r, j] - q[j]
            tot += (diff / scale[j]) ** 2 if kinds[j] == "continuous" else float(diff != 0)
        dists.append(tot / both.sum())
    order = sorted(range(len(dists)), key=lambda r: (dists[r], r))
    for j in np.flatnonzero(q_miss):
        donors = [r for r in order if not ref_miss[r, j]][:k]
        vals = ref[donors, j]
        if kinds[j] == "continuous":
            out[j] = vals.mean()
        else:
            lv, cnt = np.unique(vals, return_counts=True)
            out[j] = lv[np.argmax(cnt)]
    return out


def test_knn_imputer_matches_brute_force():
    rng = np.random.default_rng(3)
    n = 60
    X = np.column_stack([rng.normal(0, 1, n), rng.normal(10, 3, n), rng.integers(0, 2, n)]).astype(float)
    X[rng.random((n, 3)) < 0.1] = np.nan
    kinds = ["continuous", "continuous", "binary"]
    train = make_dataset(X, rng.integers(0, 2, n), kinds)
    imp = fit_knn_imputer(train, 5)
    Q = np.array([[np.nan, 9.0, 1.0], [0.5, np.nan, np.nan], [np.nan, np.nan, 0.0]])
    test = make_dataset(Q, [0, 1, 0], kinds)
    filled = impute(imp, test).feature_matrix()[0]
    for i in range(3):
        ref = _brute_impute(imp.reference, imp.reference_missing, Q[i], np.isnan(Q[i]), kinds, imp.scale, 5)
        np.testing.assert_allclose(filled[i], ref, rtol=1e-12)


def test_imputer_needs_donors_and_matching_columns():
    X = np.array([[1.0, np.nan], [2.0, np.nan], [3.0, 1.0]])
    with pytest.raises(TooFewDonors):
        fit_knn_imputer(make_dataset(X, [0, 1, 0]), 2)
    imp = fit_knn_imputer(make_dataset(X[:, :1], [0, 1, 0]), 2)
    with pytest.raises(SchemaMismatch):
        impute(imp, make_dataset(X, [0, 1, 0]))


def test_upsampling_and_downsampling_balance_classes():
    y = np.array([1] * 30 + [0] * 10)
    ds = make_dataset(np.arange(40.0)[:, None], y)
    up = rebalance(ds, BalanceStrategy("up"), 1)
    assert (up.y == 0).sum() == (up.y == 1).sum() == 30
    assert set(up.row_ids[up.y == 0]) <= set(range(30, 40))
    down = rebalance(ds, BalanceStrategy("down"), 1)
    assert (down.y == 0).sum() == (down.y == 1).sum() == 10


def test_smote_interpolates_between_minority_rows():
    rng = np.random.default_rng(2)
    X = np.column_stack([rng.normal(0, 1, 50), rng.integers(0, 2, 50)])
    y = np.array([1] * 40 + [0] * 10)
    ds = make_dataset(X, y, kinds=["continuous", "binary"])
    out = rebalance(ds, BalanceStrategy("smote", k=3), 4)
    synth = out.row_ids == -1
    assert synth.sum() == 30 and np.all(out.y[synth] == 0)
    xs = out.feature_matrix()[0][synth]
    minority = X[40:]
    assert minority[:, 0].min() <= xs[:, 0].min() and xs[:, 0].max() <= minority[:, 0].max()
    assert np.isin(xs[:, 1], (0, 1)).all()
    with pytest.raises(SmoteTooFewMinority):
        rebalance(ds.take(np.arange(43)), BalanceStrategy("smote", k=3))


def test_class_weights():
    ds = make_dataset(np.arange(6.0)[:, None], [0, 0, 0, 0, 1, 1])
    out = rebalance(ds, BalanceStrategy("weights", weights=(1.0, 2.0)))
    assert out.weights.tolist() == [1, 1, 1, 1, 2, 2]


def test_recipe_records_fit_rows_and_never_sees_new_rows(cohort):
    train = cohort.take(np.arange(200))
    other = cohort.take(np.arange(200, 260))
    r = fit_recipe(train, RecipeConfig.caret_like())
    assert np.array_equal(r.fit_row_ids, np.arange(200))
    before = (r.scaler.center.copy(), r.imputer.reference.copy())
    apply_recipe(r, other)
    assert np.array_equal(before[0], r.scaler.center) and np.array_equal(before[1], r.imputer.reference)
    out = apply_recipe(r, other)
    assert out.n_rows == 60 and "Survival" not in out.names


def test_recipe_rebalances_only_training_rows(cohort):
    train = cohort.take(np.arange(300))
    r = fit_recipe(train, RecipeConfig.caret_like(BalanceStrategy("up")))
    assert apply_recipe(r, train).n_rows == 300
    grown = apply_recipe(r, train, is_training=True, seed=1)
    assert grown.n_rows > 300 and (grown.y == 1).sum() == (grown.y == 0).sum()


def test_recipe_relaxes_categorical_levels_for_new_data():
    specs = (ColumnSpec("g", "categorical", (1, 2)), ColumnSpec("y", "binary", role="outcome"))
    train = Dataset(specs, np.array([[1, 0], [2, 1], [1, 1], [2, 0]], dtype=float))
    r = fit_recipe(train, RecipeConfig(one_hot="auto"))
    test = Dataset((ColumnSpec("g", "categorical"), specs[1]), np.array([[3, 0]], dtype=float))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        out = apply_recipe(r, test)
    assert out.feature_matrix()[0].tolist() == [[0, 0]]
    assert any(issubclass(w.category, UnknownLevelWarning) for w in caught)
