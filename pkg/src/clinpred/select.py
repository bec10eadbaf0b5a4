"""Recursive feature elimination, PCA and model-free variable importance."""
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstantFeatureWarning, RankDeficientWarning, SizesOutOfRange
from .evaluation.discrimination import auc
from .models.estimators import fit_point
from .models.tuning import design_matrix, resample_score, check_outcome
from .preprocess import RecipeConfig, apply_recipe, fit_recipe
from .resample import ResamplingPlan
from .rng import derive_seed


# -- variable importance -------------------------------------------------------------------
@dataclass(frozen=True)
class ImportanceReport:
    names: tuple
    raw: np.ndarray
    scaled: np.ndarray
    constant: tuple = ()

    def ranked(self):
        order = np.argsort(-self.scaled, kind="stable")
        return [(self.names[i], float(self.scaled[i])) for i in order]


def scale_0_100(raw):
    """Affine map of raw scores onto [0, 100]; equal scores all map to 100."""
    raw = np.asarray(raw, dtype=float)
    lo, hi = raw.min(), raw.max()
    if hi == lo:
        return np.full(raw.size, 100.0)
    return 100.0 * (raw - lo) / (hi - lo)


def _feature_scores(X, M, y, mode):
    raw = np.empty(X.shape[1])
    constant = []
    for j in range(X.shape[1]):
        ok = ~M[:, j]
        x, t = X[ok, j], y[ok]
        if x.size < 2 or np.ptp(x) == 0:
            raw[j] = 0.5 if mode == "classification" else 0.0
            constant.append(j)
            continue
        if mode == "classification":
            a = auc(x, t) if 0 < t.sum() < t.size else 0.5
            raw[j] = max(a, 1.0 - a)
        else:
            r = np.corrcoef(x, t)[0, 1] if np.ptp(t) > 0 else 0.0
            raw[j] = r * r
    return raw, constant


def variable_importance(train):
    """Folded single-feature AUC (classification) or squared correlation (regression)."""
    check_outcome(train)
    X, M = train.feature_matrix()
    raw, constant = _feature_scores(X, M, train.y, train.endpoint_mode)
    names = tuple(train.feature_names)
    if constant:
        warnings.warn(f"constant feature(s) {[names[j] for j in constant]} scored as uninformative", ConstantFeatureWarning, stacklevel=2)
    return ImportanceReport(names, raw, scale_0_100(raw), tuple(names[j] for j in constant))


# -- recursive feature elimination ---------------------------------------------------------
@dataclass(frozen=True, eq=False)
class RfeTrace:
    resample: int
    ranking: tuple
    scores: dict
    ranked_on: np.ndarray
    evaluated_on: np.ndarray


@dataclass(frozen=True, eq=False)
class RfeResult:
    sizes: tuple
    profile: dict
    best_size: int
    selected: tuple
    ranking: tuple
    metric: str
    traces: tuple = field(default=())


def _rank_sources(fit, X, y, mode, sources):
    """Source features ordered from most to least important.

    Linear models use absolute standardized coefficients, tree ensembles
    their impurity decrease; other models fall back to the model-free
    single-feature filter.  One-hot columns add up to their source.
    """
    imp = fit.importance
    if imp is None or fit.algorithm in ("nb", "knn"):
        imp, _ = _feature_scores(X, np.zeros_like(X, dtype=bool), y, mode)
    names = list(dict.fromkeys(sources))
    totals = np.zeros(len(names))
    for col, src in enumerate(sources):
        totals[names.index(src)] += imp[col]
    order = np.argsort(-totals, kind="stable")
    return tuple(names[i] for i in order)


def _columns_for(sources, keep):
    keep = set(keep)
    return np.array([c for c, s in enumerate(sources) if s in keep], dtype=np.int64)


def rfe_run(train, spec, sizes, plan=None, seed=123, recipe=None):
    """Resampled recursive feature elimination.

    Per resample the model is fitted on the analysis rows with every feature,
    features are ranked once, and nested top-``s`` subsets are refitted and
    scored on the assessment rows.  The best size maximizes mean ROC or
    minimizes mean RMSE (ties go to the smaller size); the final selection is
    the top of a ranking fitted on all rows.
    """
    check_outcome(train)
    plan = plan or ResamplingPlan("cv", 5, seed)
    recipe = recipe or RecipeConfig.caret_like()
    p = len(train.feature_names)
    sizes = tuple(sorted({int(s) for s in sizes}))
    if not sizes or sizes[0] < 1 or sizes[-1] > p:
        raise SizesOutOfRange(f"sizes must lie in [1, {p}], got {sizes}")
    mode = train.endpoint_mode
    metric = "ROC" if mode == "classification" else "RMSE"
    point = dict(spec.grid[0]) if spec.grid else {}

    def ranked_fit(ds, r):
        rec = fit_recipe(ds, recipe)
        cur = apply_recipe(rec, ds, is_training=True, seed=derive_seed(seed, r, 0))
        X, y, kinds, w = design_matrix(cur)
        fit = fit_point(spec.algorithm, X, y, kinds, mode, point, w, derive_seed(seed, r, 1))
        sources = list(rec.output_sources)
        return rec, X, y, kinds, w, sources, _rank_sources(fit, X, y, mode, sources)

    traces = []
    for r, pair in enumerate(plan.expand(train.n_rows)):
        analysis = train.take(pair.analysis)
        assessment = train.take(pair.assessment)
        rec, X, y, kinds, w, sources, ranking = ranked_fit(analysis, r)
        Xa, ya, _, _ = design_matrix(apply_recipe(rec, assessment))
        scores = {}
        for s in sizes:
            cols = _columns_for(sources, ranking[:s])
            fit = fit_point(spec.algorithm, X[:, cols], y, [kinds[c] for c in cols], mode, point, w, derive_seed(seed, r, 2 + s))
            scores[s] = resample_score(metric, fit.predict(Xa[:, cols]), ya)
        traces.append(RfeTrace(r, ranking, scores, analysis.row_ids.copy(), assessment.row_ids.copy()))

    profile = {s: float(np.nanmean([t.scores[s] for t in traces])) for s in sizes}
    sign = -1.0 if metric == "ROC" else 1.0
    best = min(sizes, key=lambda s: (sign * profile[s], s))
    _, _, _, _, _, _, final_ranking = ranked_fit(train, 2**20)
    return RfeResult(sizes, profile, best, final_ranking[:best], final_ranking, metric, tuple(traces))


# -- principal components ------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class PcaModel:
    mean: np.ndarray
    sd: np.ndarray
    rotation: np.ndarray
    explained_variance: np.ndarray

    @property
    def explained_ratio(self):
        return self.explained_variance / self.explained_variance.sum()

    def transform(self, X):
        return ((np.asarray(X, dtype=float) - self.mean) / self.sd) @ self.rotation

    def inverse_transform(self, scores):
        """Back to standardized units."""
        return np.asarray(scores, dtype=float) @ self.rotation.T


def pca_fit(X, n_components=None):
    """Principal components of the correlation matrix via a symmetric eigensolver.

    Components are ordered by decreasing eigenvalue and each is signed so its
    largest-magnitude loading is positive.  ``explained_variance`` lists all
    eigenvalues; they sum to the number of non-constant columns.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    k = p if n_components is None else int(n_components)
    if not 1 <= k <= p:
        raise SizesOutOfRange(f"n_components must lie in [1, {p}], got {k}")
    mean = X.mean(axis=0)
    sd = X.std(axis=0, ddof=1)
    sd = np.where(sd > 0, sd, 1.0)
    Z = (X - mean) / sd
    R = Z.T @ Z / (n - 1)
    vals, vecs = np.linalg.eigh(R)
    order = np.argsort(-vals, kind="stable")
    vals, vecs = np.clip(vals[order], 0.0, None), vecs[:, order]
    lead = np.argmax(np.abs(vecs), axis=0)
    vecs = vecs * np.sign(vecs[lead, np.arange(p)])
    if np.any(vals[:k] < 1e-10 * max(vals[0], 1.0)):
        warnings.warn("near-zero eigenvalues among the kept components", RankDeficientWarning, stacklevel=2)
    return PcaModel(mean, sd, vecs[:, :k], vals)


def pca_transform(model, X):
    return model.transform(X)
