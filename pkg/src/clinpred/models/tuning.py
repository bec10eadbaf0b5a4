"""Resampled hyperparameter tuning, the fitted-model bundle and prediction.

For every resample the recipe is fitted on the analysis rows only, the
analysis rows are transformed (and rebalanced), every grid point is fitted,
and the metric is computed on the transformed assessment rows.  Each
resample's audit entry records the rows the recipe saw so tests can prove
that no assessment row leaked into any fitted statistic.
"""
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import DegenerateOutcome, ExtrapolationWarning, InvalidSpec, SchemaMismatch
from ..evaluation.diagnostics import extrapolation_flags
from ..evaluation.discrimination import auc, confusion_at
from ..evaluation.regression import regression_report
from ..preprocess import RecipeConfig, apply_recipe, fit_recipe
from ..resample import ResamplingPlan
from ..rng import derive_seed
from .estimators import (
    SIMPLICITY,
    EstimatorSpec,
    complexity_key,
    default_grid,
    fit_grid,
    fit_point,
    predict_grid,
)

FORMAT_VERSION = 1
METRICS = {"classification": "ROC", "regression": "RMSE"}
# ordinals mixed into the control seed
_BALANCE, _MODEL, _FINAL = 0, 1, 2**20


@dataclass(frozen=True)
class TrainControl:
    plan: ResamplingPlan = field(default_factory=ResamplingPlan)
    metric: str = None
    balance: object = None
    recipe: RecipeConfig = field(default_factory=RecipeConfig.caret_like)
    seed: int = 123
    threads: int = 1

    def resolved(self, mode):
        metric = self.metric or METRICS[mode]
        if metric != METRICS[mode]:
            raise InvalidSpec(f"metric {metric} does not fit a {mode} endpoint")
        recipe = self.recipe if self.balance is None else replace(self.recipe, balance=self.balance)
        if mode == "regression" and recipe.balance.kind != "none":
            raise InvalidSpec("class rebalancing needs a classification endpoint")
        return metric, recipe


@dataclass(frozen=True, eq=False)
class FittedModel:
    algorithm: str
    point: dict
    mode: str
    fit: object
    recipe: object
    outcome: str
    feature_ranges: dict
    levels: dict
    cutoff: float = 0.5
    format_version: int = FORMAT_VERSION
    training_metrics: dict = field(default_factory=dict)

    @property
    def input_features(self):
        return self.recipe.input_features

    def with_cutoff(self, cutoff):
        if not 0.0 <= cutoff <= 1.0:
            raise InvalidSpec(f"cutoff must lie in [0, 1], got {cutoff}")
        return replace(self, cutoff=float(cutoff))


@dataclass(frozen=True, eq=False)
class AuditEntry:
    resample: int
    analysis_ids: np.ndarray
    assessment_ids: np.ndarray
    recipe_fit_ids: np.ndarray
    recipe_fingerprint: str


@dataclass(frozen=True, eq=False)
class TrainedResult:
    """``table`` rows: (point index, resample, metric value); ``summary`` rows: (point index, mean, sd)."""

    best: FittedModel
    spec: EstimatorSpec
    grid: tuple
    metric: str
    table: np.ndarray
    summary: np.ndarray
    best_index: int
    trace: tuple
    audit: tuple
    holdout: np.ndarray
    extra: dict

    @property
    def best_score(self):
        return float(self.summary[self.best_index, 1])


def resample_score(metric, pred, y):
    if metric == "ROC":
        if y.min() == y.max():
            return np.nan
        return auc(pred, y)
    return float(np.sqrt(np.mean((pred - y) ** 2)))


def _extra_metrics(mode, pred, y):
    if mode == "classification":
        cm = confusion_at(pred, y, 0.5)
        sens = cm.tp / cm.positives if cm.positives else np.nan
        spec = cm.tn / cm.negatives if cm.negatives else np.nan
        return {"Sens": sens, "Spec": spec}
    rep = regression_report(pred, y)
    return {"MAE": rep.mae, "Rsquared": np.nan if rep.r2 is None else rep.r2}


def design_matrix(ds):
    X, M = ds.feature_matrix()
    if M.any():
        raise SchemaMismatch("design still has missing cells; configure imputation")
    kinds = [s.kind for s in ds.feature_specs]
    w = ds.weights
    return X, ds.y, kinds, w


def check_outcome(ds):
    y = ds.y
    if np.isnan(y).any():
        raise DegenerateOutcome("outcome has missing values")
    if ds.endpoint_mode == "classification":
        if np.unique(y).size < 2:
            raise DegenerateOutcome("outcome has a single class")
    elif np.ptp(y) == 0:
        raise DegenerateOutcome("outcome has zero variance")


def select_best(algorithm, grid, means, metric):
    """Best mean metric; exact ties go to the simplest point."""
    sign = -1.0 if metric == "ROC" else 1.0
    keyed = [
        (sign * m if np.isfinite(m) else np.inf, complexity_key(algorithm, p), i)
        for i, (p, m) in enumerate(zip(grid, means))
    ]
    return min(keyed)[2]


def _training_profile(ds):
    ranges, levels = {}, {}
    for s in ds.feature_specs:
        j = ds.index(s.name)
        x = ds.values[~ds.missing[:, j], j]
        if x.size == 0:
            continue
        if s.kind == "continuous":
            ranges[s.name] = (float(x.min()), float(x.max()))
        else:
            levels[s.name] = tuple(float(v) for v in np.unique(x))
    return ranges, levels


def fit_final(train, spec, point, recipe_config, seed):
    """Fit the recipe and one grid point on all training rows."""
    recipe = fit_recipe(train, recipe_config)
    cur = apply_recipe(recipe, train, is_training=True, seed=derive_seed(seed, _FINAL, _BALANCE))
    X, y, kinds, w = design_matrix(cur)
    fit = fit_point(spec.algorithm, X, y, kinds, train.endpoint_mode, point, w, derive_seed(seed, _FINAL, _MODEL))
    ranges, levels = _training_profile(train)
    return FittedModel(spec.algorithm, dict(point), train.endpoint_mode, fit, recipe, train.outcome, ranges, levels)


def train_tuned(train, spec, ctrl=None):
    """Tune ``spec`` over ``ctrl.plan`` and refit the best point on all of ``train``.

    The result holds the per-(point, resample) metric table, the per-point
    summary, an audit entry per resample and the averaged held-out
    prediction for every training row under the best point (NaN for rows
    never assessed).  Results do not depend on ``ctrl.threads``.
    """
    ctrl = ctrl or TrainControl()
    mode = train.endpoint_mode
    check_outcome(train)
    metric, recipe_cfg = ctrl.resolved(mode)
    resamples = ctrl.plan.expand(train.n_rows)

    grid = spec.grid
    if grid is None:
        full = apply_recipe(fit_recipe(train, replace(recipe_cfg, balance=replace(recipe_cfg.balance, kind="none"))), train)
        X, y, _, w = design_matrix(full)
        grid = default_grid(spec.algorithm, X, y, mode, w)
    grid = tuple(dict(p) for p in grid)

    def run(r):
        pair = resamples[r]
        analysis = train.take(pair.analysis)
        assessment = train.take(pair.assessment)
        recipe = fit_recipe(analysis, recipe_cfg)
        cur = apply_recipe(recipe, analysis, is_training=True, seed=derive_seed(ctrl.seed, r, _BALANCE))
        X, y, kinds, w = design_matrix(cur)
        fits = fit_grid(spec.algorithm, X, y, kinds, mode, grid, w, derive_seed(ctrl.seed, r, _MODEL))
        held = apply_recipe(recipe, assessment)
        Xa, ya, _, _ = design_matrix(held)
        preds = predict_grid(fits, Xa)
        scores = [resample_score(metric, p, ya) for p in preds]
        extra = [_extra_metrics(mode, p, ya) for p in preds]
        entry = AuditEntry(r, analysis.row_ids.copy(), assessment.row_ids.copy(), recipe.fit_row_ids, recipe.fingerprint)
        return scores, extra, preds, entry

    if ctrl.threads > 1:
        with ThreadPoolExecutor(max_workers=ctrl.threads) as pool:
            outputs = list(pool.map(run, range(len(resamples))))
    else:
        outputs = [run(r) for r in range(len(resamples))]

    table = np.array([(i, r, outputs[r][0][i]) for i in range(len(grid)) for r in range(len(resamples))])
    per_point = np.array([[outputs[r][0][i] for r in range(len(resamples))] for i in range(len(grid))])
    means = np.nanmean(per_point, axis=1)
    sds = np.nanstd(per_point, axis=1, ddof=1) if len(resamples) > 1 else np.zeros(len(grid))
    summary = np.column_stack([np.arange(len(grid)), means, sds])
    best = select_best(spec.algorithm, grid, means, metric)
    extra = {
        key: float(np.nanmean([outputs[r][1][best][key] for r in range(len(resamples))]))
        for key in outputs[0][1][best]
    }
    trace = tuple(
        (i, float(means[i]), i == best) for i in range(len(grid))
    )

    total = np.zeros(train.n_rows)
    count = np.zeros(train.n_rows)
    for r, pair in enumerate(resamples):
        np.add.at(total, pair.assessment, outputs[r][2][best])
        np.add.at(count, pair.assessment, 1.0)
    holdout = np.where(count > 0, total / np.maximum(count, 1), np.nan)

    model = fit_final(train, spec, grid[best], recipe_cfg, ctrl.seed)
    model = replace(model, training_metrics={metric: float(means[best]), **extra})
    return TrainedResult(
        best=model, spec=spec, grid=grid, metric=metric, table=table, summary=summary, best_index=best,
        trace=trace, audit=tuple(o[3] for o in outputs), holdout=holdout, extra=extra,
    )


def family_rank(algorithm):
    return SIMPLICITY[algorithm]


@dataclass(frozen=True, eq=False)
class Predictions:
    values: np.ndarray
    labels: np.ndarray
    flags: tuple
    imputed: tuple
    mode: str

    @property
    def probabilities(self):
        """``(n, 2)`` array of (negative, positive) class probabilities."""
        return np.column_stack([1.0 - self.values, self.values])


def predict(model, ds):
    """Predict with the embedded recipe; missing inputs are imputed, out-of-range rows flagged."""
    needed = model.input_features
    absent = [n for n in needed if n not in ds.names]
    if absent:
        raise SchemaMismatch(f"input lacks required feature column(s): {', '.join(absent)}")
    imputed = []
    cols = [ds.index(n) for n in needed]
    for row in ds.missing[:, cols]:
        imputed.append(tuple(needed[k] for k in np.flatnonzero(row)))
    X, _, _, _ = design_matrix(apply_recipe(model.recipe, ds))
    values = np.asarray(model.fit.predict(X), dtype=float)
    flags = extrapolation_flags(model, ds)
    n_flagged = sum(1 for f in flags if f)
    if n_flagged:
        warnings.warn(f"{n_flagged} row(s) lie outside the training range; predictions extrapolate", ExtrapolationWarning, stacklevel=2)
    if model.mode == "classification":
        values = np.clip(values, 0.0, 1.0)
        labels = (values > model.cutoff).astype(int)
    else:
        labels = None
    return Predictions(values, labels, tuple(flags), tuple(imputed), model.mode)
