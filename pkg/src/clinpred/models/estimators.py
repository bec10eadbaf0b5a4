"""Estimator registry: default grids, per-point fitting and grid fitting.

Every algorithm maps a design matrix (already transformed by a recipe) to a
fitted object with ``predict(X)``, returning the positive-class probability
for classification and the conditional mean for regression.

Penalized linear models use the glmnet scaling: the data term is averaged
over rows, so the solvers receive ``lambda * sum(weights)``.  Columns are
standardized internally and coefficients mapped back to the input scale.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidSpec
from .bayes import nb_fit
from .knn import knn_fit, neighbour_order
from .linear import _sigmoid, elastic_net_gram, irls_logistic, logistic_elastic_net, ols_solve
from .trees import forest_fit, gbm_fit

ALGORITHMS = ("glm", "ridge", "lasso", "enet", "nb", "knn", "rf", "gbm")
# interpretability order used to break ties between model families
SIMPLICITY = {"glm": 0, "ridge": 1, "lasso": 1, "enet": 1, "nb": 2, "knn": 3, "rf": 4, "gbm": 5}
CLASSIFICATION_ONLY = ("nb", "gbm")


@dataclass(frozen=True)
class EstimatorSpec:
    """``grid`` is a tuple of hyperparameter dicts; ``None`` asks for the default grid."""

    algorithm: str
    grid: tuple = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise InvalidSpec(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if self.grid is not None:
            if len(self.grid) == 0:
                raise InvalidSpec("hyperparameter grid is empty")
            for point in self.grid:
                validate_point(self.algorithm, point)


def validate_point(algorithm, point):
    lam = point.get("lambda", 0.0)
    alpha = point.get("alpha", 1.0)
    checks = [
        (lam >= 0, "lambda must be >= 0"),
        (0 <= alpha <= 1, "alpha must lie in [0, 1]"),
        (point.get("mtry", 1) >= 1, "mtry must be >= 1"),
        (point.get("n_trees", 1) >= 1, "n_trees must be >= 1"),
        (0 < point.get("shrinkage", 0.1) <= 1, "shrinkage must lie in (0, 1]"),
        (point.get("fL", 0) >= 0, "fL must be >= 0"),
        (point.get("adjust", 1) > 0, "adjust must be > 0"),
        (point.get("k", 1) >= 1, "k must be >= 1"),
        (point.get("depth", 1) >= 1, "depth must be >= 1"),
    ]
    for ok, message in checks:
        if not ok:
            raise InvalidSpec(f"{algorithm}: {message} (got {point})")


def point_label(point):
    return ", ".join(f"{k}={point[k]:g}" if isinstance(point[k], float) else f"{k}={point[k]}" for k in sorted(point)) or "none"


def complexity_key(algorithm, point):
    """Smaller is simpler: fewer trees, larger lambda, shallower trees, smaller k."""
    if algorithm in ("ridge", "lasso", "enet"):
        return (-point.get("lambda", 0.0), point.get("alpha", 1.0))
    if algorithm == "rf":
        return (point.get("n_trees", 500), point.get("mtry", 1))
    if algorithm == "gbm":
        return (point.get("n_trees", 100), point.get("depth", 1), point.get("shrinkage", 0.1))
    if algorithm == "knn":
        return (point.get("k", 5),)
    if algorithm == "nb":
        return (int(point.get("usekernel", False)), point.get("fL", 0.0), point.get("adjust", 1.0))
    return ()


# -- standardization -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _Standardized:
    Z: np.ndarray
    mean: np.ndarray
    sd: np.ndarray


def _standardize(X, w):
    W = w.sum()
    mean = w @ X / W
    sd = np.sqrt(w @ (X - mean) ** 2 / W)
    sd = np.where(sd > 1e-12, sd, 1.0)
    return _Standardized((X - mean) / sd, mean, sd)


def lambda_max(X, y, alpha, weights=None):
    """Smallest glmnet-scale penalty that zeroes every coefficient."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones(y.size) if weights is None else np.asarray(weights, dtype=float)
    st = _standardize(X, w)
    ybar = w @ y / w.sum()
    grad = np.abs(st.Z.T @ (w * (y - ybar))) / w.sum()
    top = float(grad.max(initial=0.0))
    return max(top, 1e-8) / max(alpha, 1e-3)


# -- fitted objects ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LinearModel:
    intercept: float
    coef: np.ndarray
    coef_std: np.ndarray
    mode: str

    def predict(self, X):
        eta = self.intercept + np.asarray(X, dtype=float) @ self.coef
        return _sigmoid(eta) if self.mode == "classification" else eta

    @property
    def importance(self):
        return np.abs(self.coef_std)


@dataclass(frozen=True, eq=False)
class Fit:
    algorithm: str
    point: dict
    mode: str
    model: object

    def predict(self, X):
        return np.asarray(self.model.predict(np.asarray(X, dtype=float)), dtype=float)

    @property
    def importance(self):
        return getattr(self.model, "importance", None)


def _from_standardized(b0, beta, st, mode):
    coef = beta / st.sd
    return LinearModel(float(b0 - st.mean @ coef), coef, beta.copy(), mode)


def _fit_glm(X, y, w, mode):
    st = _standardize(X, w)
    design = np.column_stack([np.ones(X.shape[0]), st.Z])
    if mode == "classification":
        res = irls_logistic(design, y, weights=w)
        b = res.coef
    else:
        b = ols_solve(design, y, weights=w)
    return _from_standardized(b[0], b[1:], st, mode)


def _fit_penalized_path(X, y, w, mode, lambdas, alpha):
    """Fit a descending lambda sequence with warm starts; returns models in input order."""
    st = _standardize(X, w)
    W = w.sum()
    order = np.argsort(-np.asarray(lambdas, dtype=float), kind="stable")
    out = [None] * len(lambdas)
    if mode == "classification":
        start = None
        for i in order:
            b0, beta = logistic_elastic_net(st.Z, y, lambdas[i] * W, alpha, weights=w, start=start)
            start = (b0, beta)
            out[i] = _from_standardized(b0, beta, st, mode)
    else:
        ybar = w @ y / W
        Zw = st.Z * w[:, None]
        G = Zw.T @ st.Z
        c = Zw.T @ (y - ybar)
        beta = np.zeros(X.shape[1])
        for i in order:
            beta = elastic_net_gram(G, c, lambdas[i] * W, alpha, beta0=beta)
            out[i] = _from_standardized(ybar, beta, st, mode)
    return out


def _mtry(point, p):
    return int(min(max(int(point.get("mtry", max(int(math.sqrt(p)), 1))), 1), p))


def fit_point(algorithm, X, y, kinds, mode, point=None, weights=None, seed=0):
    """Fit one hyperparameter point and wrap it in a :class:`Fit`."""
    point = dict(point or {})
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones(y.size) if weights is None else np.asarray(weights, dtype=float)
    if mode == "regression" and algorithm in CLASSIFICATION_ONLY:
        raise InvalidSpec(f"{algorithm} supports classification endpoints only")
    if algorithm == "glm":
        model = _fit_glm(X, y, w, mode)
    elif algorithm in ("ridge", "lasso", "enet"):
        alpha = {"ridge": 0.0, "lasso": 1.0}.get(algorithm, point.get("alpha", 1.0))
        model = _fit_penalized_path(X, y, w, mode, [point.get("lambda", 0.0)], alpha)[0]
    elif algorithm == "nb":
        model = nb_fit(X, y, kinds, point.get("fL", 0.0), point.get("usekernel", False), point.get("adjust", 1.0), w)
    elif algorithm == "knn":
        model = knn_fit(X, y, kinds, point.get("k", 5))
    elif algorithm == "rf":
        model = forest_fit(
            X, y, point.get("n_trees", 500), _mtry(point, X.shape[1]),
            min_leaf=point.get("min_leaf", 1 if mode == "classification" else 5), weights=w, seed=seed,
        )
    elif algorithm == "gbm":
        model = gbm_fit(
            X, y, point.get("n_trees", 100), point.get("depth", 1), point.get("shrinkage", 0.1),
            point.get("min_obs", 10), point.get("bag_fraction", 0.5), weights=w, seed=seed,
        )
    else:
        raise InvalidSpec(f"unknown algorithm {algorithm!r}")
    return Fit(algorithm, point, mode, model)


@dataclass(frozen=True, eq=False)
class Truncated:
    """A boosted ensemble read at fewer stages than it was grown to."""

    boosted: object
    n_trees: int

    def predict(self, X):
        return self.boosted.predict(X, self.n_trees)

    @property
    def importance(self):
        trees = self.boosted.trees[: self.n_trees]
        return np.sum([t.importance for t in trees], axis=0) if trees else None


@dataclass(frozen=True, eq=False)
class KnnView:
    """A kNN model queried with its own ``k``."""

    model: object
    k: int

    def predict(self, X):
        return self.model.predict(X, self.k)


def fit_grid(algorithm, X, y, kinds, mode, grid, weights=None, seed=0):
    """Fit every grid point, sharing work along warm-start paths.

    Penalized models walk each alpha's lambda path from the largest value;
    boosting grows the largest tree count once per (depth, shrinkage) and reads
    it at smaller counts; kNN sorts neighbours once for all k.  Results come
    back in grid order.  Warm-started paths agree with separate fits up to
    the solver tolerance.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones(y.size) if weights is None else np.asarray(weights, dtype=float)
    grid = [dict(p) for p in grid]
    out = [None] * len(grid)
    if algorithm in ("ridge", "lasso", "enet"):
        default_alpha = {"ridge": 0.0, "lasso": 1.0}.get(algorithm)
        groups = {}
        for i, p in enumerate(grid):
            a = default_alpha if default_alpha is not None else p.get("alpha", 1.0)
            groups.setdefault(a, []).append(i)
        for a, idx in groups.items():
            models = _fit_penalized_path(X, y, w, mode, [grid[i].get("lambda", 0.0) for i in idx], a)
            for i, m in zip(idx, models):
                out[i] = Fit(algorithm, grid[i], mode, m)
        return out
    if algorithm == "gbm" and mode == "classification":
        groups = {}
        for i, p in enumerate(grid):
            key = (p.get("depth", 1), p.get("shrinkage", 0.1), p.get("min_obs", 10), p.get("bag_fraction", 0.5))
            groups.setdefault(key, []).append(i)
        for (depth, shrink, min_obs, bag), idx in groups.items():
            most = max(grid[i].get("n_trees", 100) for i in idx)
            boosted = gbm_fit(X, y, most, depth, shrink, min_obs, bag, weights=w, seed=seed)
            for i in idx:
                out[i] = Fit(algorithm, grid[i], mode, Truncated(boosted, grid[i].get("n_trees", 100)))
        return out
    if algorithm == "knn":
        base = knn_fit(X, y, kinds, 1)
        for i, p in enumerate(grid):
            out[i] = Fit(algorithm, p, mode, KnnView(base, int(min(p.get("k", 5), X.shape[0]))))
        return out
    return [fit_point(algorithm, X, y, kinds, mode, p, w, seed) for p in grid]


def predict_grid(fits, X):
    """Predictions of every fit on ``X``; kNN views share one neighbour search."""
    X = np.asarray(X, dtype=float)
    knn = [f for f in fits if isinstance(f.model, KnnView)]
    cache = None
    if knn:
        base = knn[0].model.model
        kmax = max(f.model.k for f in knn)
        order = neighbour_order(base.reference, X, base.kinds, base.scale, kmax)
        cache = base.target[order]
    preds = []
    for f in fits:
        if isinstance(f.model, KnnView):
            preds.append(cache[:, : f.model.k].mean(axis=1))
        else:
            preds.append(f.predict(X))
    return preds


def default_grid(algorithm, X, y, mode, weights=None):
    """Default hyperparameter grids, with lambda sequences scaled to the data."""
    p = X.shape[1]
    if algorithm == "glm":
        return ({},)
    if algorithm == "ridge":
        return tuple({"lambda": float(v)} for v in np.logspace(-4, 2, 25))
    if algorithm in ("lasso", "enet"):
        alphas = (1.0,) if algorithm == "lasso" else (0.0, 0.25, 0.5, 0.75, 1.0)
        grid = []
        for a in alphas:
            top = lambda_max(X, y, a, weights)
            for v in np.logspace(np.log10(top), np.log10(top) - 3, 50):
                grid.append({"lambda": float(v)} if algorithm == "lasso" else {"alpha": a, "lambda": float(v)})
        return tuple(grid)
    if algorithm == "rf":
        mtrys = sorted({max(int(math.sqrt(p)), 1), max(p // 3, 1), p})
        return tuple({"mtry": m, "n_trees": 500} for m in mtrys)
    if algorithm == "gbm":
        return tuple(
            {"n_trees": t, "depth": d, "shrinkage": 0.1, "min_obs": 10}
            for d in (1, 2, 3) for t in (50, 100, 150)
        )
    if algorithm == "nb":
        return tuple({"fL": f, "usekernel": k, "adjust": 1.0} for f in (0.0, 1.0) for k in (False, True))
    if algorithm == "knn":
        return tuple({"k": k} for k in (5, 9, 15, 25, 35))
    raise InvalidSpec(f"unknown algorithm {algorithm!r}")
