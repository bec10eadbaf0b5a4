import numpy as np

from clinpred.models.trees import bin_edges, cart_grow, forest_fit, gbm_fit, gini_decrease


def test_gini_decrease_perfect_split():
    # 5/5 parent separated into two pure children
    assert gini_decrease([5, 5], [5, 0], [0, 5]) == 0.5
    assert gini_decrease([5, 5], [3, 2], [2, 3]) < 0.5


def test_sse_is_half_gini():
    # for 0/1 labels, sum (y - ybar)^2 equals n * p (1 - p), half of n * gini
    y = np.array([1, 1, 0, 1, 0, 0, 0])
    p = y.mean()
    gini = 1 - p**2 - (1 - p) ** 2
    assert np.isclose(np.sum((y - p) ** 2), y.size * gini / 2)


def _best_stump(x, y):
    best = (np.inf, None)
    u = np.unique(x)
    for t in (u[:-1] + u[1:]) / 2:
        left, right = y[x <= t], y[x > t]
        sse = np.sum((left - left.mean()) ** 2) + np.sum((right - right.mean()) ** 2)
        if sse < best[0] - 1e-12:
            best = (sse, t)
    return best


def test_stump_matches_exhaustive_search():
    rng = np.random.default_rng(1)
    for _ in range(20):
        x = rng.normal(size=40)
        y = (x + rng.normal(0, 0.8, 40) > 0).astype(float)
        tree = cart_grow(x[:, None], y, max_depth=1)
        sse, thr = _best_stump(x, y)
        assert tree.feature[0] == 0
        assert np.isclose(tree.threshold[0], thr)
        pred = tree.predict(x[:, None])
        assert np.isclose(np.sum((y - pred) ** 2), sse)


def test_deep_tree_interpolates_distinct_rows():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(60, 3))
    y = rng.normal(size=60)
    tree = cart_grow(X, y)
    np.testing.assert_allclose(tree.predict(X), y)
    assert tree.n_leaves == 60


def test_min_leaf_respected():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(200, 2))
    y = X[:, 0] + rng.normal(0, 0.1, 200)
    tree = cart_grow(X, y, min_leaf=15)
    counts = np.bincount(tree.apply(X))
    assert counts[counts > 0].min() >= 15


def test_bin_edges_cap():
    x = np.random.default_rng(4).normal(size=5000)
    assert bin_edges(x, 64).size <= 63
    assert bin_edges(np.array([1.0, 1.0, 2.0]), 64).tolist() == [1.5]
    assert bin_edges(np.ones(5)).size == 0


def test_forest_is_seed_deterministic():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(300, 4))
    y = (X[:, 0] - X[:, 1] > 0).astype(float)
    a = forest_fit(X, y, n_trees=20, mtry=2, seed=9).predict(X)
    b = forest_fit(X, y, n_trees=20, mtry=2, seed=9).predict(X)
    c = forest_fit(X, y, n_trees=20, mtry=2, seed=10).predict(X)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_forest_importance_finds_signal():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(500, 5))
    y = (X[:, 2] > 0).astype(float)
    imp = forest_fit(X, y, n_trees=30, mtry=2, seed=1).importance
    assert np.argmax(imp) == 2


def test_gbm_training_loss_never_increases():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(400, 4))
    y = (X[:, 0] + 0.5 * X[:, 1] + rng.normal(0, 1, 400) > 0).astype(float)
    for shrink, depth in ((0.1, 1), (1.0, 3)):
        g = gbm_fit(X, y, n_trees=60, depth=depth, shrinkage=shrink, seed=2)
        assert np.all(np.diff(g.train_loss) <= 1e-12)
        assert g.train_loss[-1] < g.train_loss[0]


def test_gbm_initial_score_is_logit_prevalence():
    y = np.array([1.0] * 30 + [0.0] * 70)
    X = np.random.default_rng(8).normal(size=(100, 2))
    g = gbm_fit(X, y, n_trees=0)
    assert np.isclose(g.init, np.log(0.3 / 0.7))
    np.testing.assert_allclose(g.predict(X), 0.3)


def test_gbm_truncation_matches_prefix():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(200, 3))
    y = (X[:, 0] > 0).astype(float)
    long = gbm_fit(X, y, n_trees=40, seed=3)
    short = gbm_fit(X, y, n_trees=15, seed=3)
    np.testing.assert_allclose(long.predict(X, 15), short.predict(X), atol=1e-12)
