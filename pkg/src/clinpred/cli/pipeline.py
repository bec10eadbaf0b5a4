"""The batch workflow: split, optional RFE, tuning, comparison, freeze, test.

Test rows live in a :class:`HoldoutVault` from the moment of the split.  The
vault hands them out only after :meth:`HoldoutVault.freeze` has been called
with the final model, whose cutoff is resolved from resampled training
predictions beforehand.  Every step appends to an event log so tests can
check the order in which data was touched.
"""
from dataclasses import replace

import numpy as np

from ..data import GeneratorSpec, SplitPair, class_balance_check, generate_synthetic_cohort, load_csv, split_train_test
from ..errors import FirewallViolation, InvalidSpec, MissingColumn, SchemaMismatch
from ..evaluation import (
    auc,
    calibration_report,
    confusion_at,
    discrimination_report,
    optimal_cutoff,
    overfit_gap,
    qq_points,
    regression_report,
    roc_curve,
    smoothed_curve,
)
from ..models.estimators import SIMPLICITY, EstimatorSpec, point_label
from ..models.tuning import TrainControl, predict, train_tuned
from ..select import rfe_run, scale_0_100, variable_importance

REPORT_VERSION = 1


class EventLog:
    def __init__(self):
        self.events = []

    def __call__(self, event, detail=""):
        self.events.append((event, detail))

    def first(self, event):
        for i, (e, _) in enumerate(self.events):
            if e == event:
                return i
        return None


class HoldoutVault:
    """Keeps the test partition out of reach until the final model is frozen."""

    def __init__(self, test, log):
        self._test = test
        self._log = log
        self.frozen = None

    def freeze(self, model):
        if self.frozen is not None:
            raise FirewallViolation("the final model is already frozen")
        self.frozen = model
        self._log("freeze", f"{model.algorithm} cutoff={model.cutoff!r}")

    def open(self):
        if self.frozen is None:
            raise FirewallViolation("test rows requested before the final model was frozen")
        self._log("test:open")
        return self._test


# -- data ---------------------------------------------------------------------------------
def load_data(cfg):
    src = cfg.data
    if src.generate is not None:
        gen = src.generate
        ds = generate_synthetic_cohort(gen["n"], gen["seed"], GeneratorSpec.from_mapping(gen.get("spec")))
        if src.schema:
            by_name = {s.name: s for s in src.schema}
            unknown = sorted(set(by_name) - set(ds.names))
            if unknown:
                raise MissingColumn(f"schema columns not in the generated cohort: {unknown}")
            ds = replace(ds, specs=tuple(by_name.get(s.name, s) for s in ds.specs))
    elif src.input is not None:
        ds = load_csv(src.input, list(src.schema), outcome=cfg.endpoint, endpoint_mode=cfg.mode)
    else:
        raise InvalidSpec("config gives no data source (data.input or data.generate)")
    if cfg.endpoint not in ds.names:
        raise MissingColumn(f"endpoint column {cfg.endpoint!r} not in data")
    ds = ds.with_outcome(cfg.endpoint, cfg.mode)
    if src.drop:
        if cfg.endpoint in src.drop:
            raise InvalidSpec("data.drop removes the endpoint")
        ds = ds.drop(list(src.drop))
    return ds


def read_for_model(path, model, with_outcome=False):
    """Read a CSV using the column kinds the model was trained with.

    Columns the model does not know are ignored.  Categorical level sets are
    relaxed so unseen levels reach the one-hot step, which flags them.
    """
    ds = load_csv(path, [], outcome=None)
    ds = replace(ds, specs=tuple(replace(s, role="feature") for s in ds.specs))
    known = {s.name: s for s in model.recipe.input_specs}
    specs = []
    for s in ds.specs:
        ref = known.get(s.name)
        if ref is None or (ref.role == "outcome" and not with_outcome):
            specs.append(replace(s, role="ignored"))
        else:
            specs.append(replace(ref, role="feature", levels=() if ref.kind == "categorical" else ref.levels))
    ds = replace(ds, specs=tuple(specs))
    if with_outcome:
        if model.outcome not in ds.names:
            raise SchemaMismatch(f"evaluation data lacks the outcome column {model.outcome!r}")
        ds = ds.with_outcome(model.outcome, model.mode)
    return ds


# -- helpers ------------------------------------------------------------------------------
def _finite(v):
    if v is None:
        return None
    v = float(v)
    return v if np.isfinite(v) else None


def source_importance(model, train):
    """Importance per input feature, 0-100, ordered from most to least important.

    Uses the model's own importance (absolute standardized coefficients or
    impurity decrease; one-hot columns summed to their source) and falls back
    to the model-free filter for models without one.
    """
    imp = model.fit.importance
    if imp is None:
        rep = variable_importance(train)
        names, raw = list(rep.names), np.asarray(rep.raw, dtype=float)
    else:
        sources = list(model.recipe.output_sources)
        names = list(dict.fromkeys(sources))
        raw = np.zeros(len(names))
        for col, src in enumerate(sources):
            raw[names.index(src)] += imp[col]
    scaled = scale_0_100(raw)
    order = np.argsort(-scaled, kind="stable")
    return [names[i] for i in order], [float(scaled[i]) for i in order], [float(raw[i]) for i in order]


def resolve_cutoff(policy, holdout, y):
    if policy.policy == "fixed":
        return float(policy.value)
    ok = np.isfinite(holdout)
    target = None if policy.target is None else float(policy.target)
    return optimal_cutoff(holdout[ok], y[ok], policy.policy, target)


def pick_final(results, metric):
    """Best resampled metric across models; exact ties go to the simpler family."""
    sign = -1.0 if metric == "ROC" else 1.0
    keyed = []
    for i, res in enumerate(results):
        score = res.best_score
        keyed.append((sign * score if np.isfinite(score) else np.inf, SIMPLICITY[res.spec.algorithm], i))
    return min(keyed)[2]


def classification_metrics(probs, y, cutoff, groups):
    cm = confusion_at(probs, y, cutoff)
    a = auc(probs, y)
    disc = discrimination_report(cm, a, cutoff)
    cal = calibration_report(probs, y, groups)
    gx, gy = smoothed_curve(probs, y)
    metrics = {**{k: _finite(v) for k, v in disc.as_dict().items()}}
    metrics.update({"tp": cm.tp, "fp": cm.fp, "tn": cm.tn, "fn": cm.fn})
    metrics.update({f"calibration_{k}": _finite(v) for k, v in cal.as_dict().items()})
    metrics["calibration_hl_df"] = cal.hl_df
    plots = {
        "roc": {"points": roc_curve(probs, y).tolist(), "auc": a},
        "calibration": {
            "bins": [[b.mean_predicted, b.observed, b.count] for b in cal.bins],
            "curve": [[float(u), _finite(v)] for u, v in zip(gx, gy)],
        },
    }
    return metrics, plots


def regression_metrics(preds, y):
    rep = regression_report(preds, y)
    return {"rmse": rep.rmse, "mae": rep.mae, "r2": rep.r2}, {"qq": qq_points(preds, y).tolist()}


# -- the workflow ---------------------------------------------------------------------------
def run_pipeline(cfg, log=None):
    """Execute the configured workflow; returns ``(report, final model)``.

    Nothing is written here: the caller owns the output directory.
    """
    log = log if log is not None else EventLog()
    ds = load_data(cfg)
    log("load", f"{ds.n_rows} rows")
    pair = split_train_test(ds, cfg.split_fraction, cfg.split_seed)
    train = pair.train
    vault = HoldoutVault(pair.test, log)
    del pair
    log("split", f"train={train.n_rows}")

    rfe_section = None
    if cfg.rfe.enabled:
        grids = {m.algorithm: m.grid for m in cfg.models}
        spec = EstimatorSpec(cfg.rfe.algorithm, grids.get(cfg.rfe.algorithm))
        rfe = rfe_run(train, spec, cfg.rfe.sizes, cfg.rfe.plan, cfg.seed, cfg.recipe)
        keep = set(rfe.selected)
        train = replace(train, specs=tuple(
            replace(s, role="ignored") if s.role == "feature" and s.name not in keep else s for s in train.specs
        ))
        rfe_section = {
            "algorithm": cfg.rfe.algorithm,
            "metric": rfe.metric,
            "sizes": list(rfe.sizes),
            "profile": [_finite(rfe.profile[s]) for s in rfe.sizes],
            "best_size": rfe.best_size,
            "selected": list(rfe.selected),
            "ranking": list(rfe.ranking),
        }
        log("rfe", ",".join(rfe.selected))

    ctrl = TrainControl(plan=cfg.plan, metric=cfg.metric, recipe=cfg.recipe, seed=cfg.seed, threads=cfg.threads)
    results = []
    for spec in cfg.models:
        res = train_tuned(train, spec, ctrl)
        results.append(res)
        log("tune", spec.algorithm)
    chosen = pick_final(results, cfg.metric)
    final = results[chosen]
    log("select", final.spec.algorithm)

    model = final.best
    if cfg.mode == "classification":
        cutoff = resolve_cutoff(cfg.cutoff, final.holdout, train.y)
        model = model.with_cutoff(cutoff)
        log("cutoff", repr(cutoff))
    vault.freeze(model)

    comparison = []
    for i, res in enumerate(results):
        comparison.append({
            "algorithm": res.spec.algorithm,
            "best_point": {k: v for k, v in sorted(res.grid[res.best_index].items())},
            "label": point_label(res.grid[res.best_index]),
            "metric": res.metric,
            "mean": _finite(res.summary[res.best_index, 1]),
            "sd": _finite(res.summary[res.best_index, 2]),
            "extra": {k: _finite(v) for k, v in res.extra.items()},
            "grid_size": len(res.grid),
            "selected": i == chosen,
        })
    names, scores, raw = source_importance(model, train)

    # -- the one-shot test evaluation -----------------------------------------------
    test = vault.open()
    pred = predict(model, test)
    if cfg.mode == "classification":
        test_metrics, plots = classification_metrics(pred.values, test.y, model.cutoff, cfg.groups)
        train_value = final.best_score
        gap = overfit_gap(train_value, test_metrics["auc"], "higher_is_better")
        train_metrics = {"auc": train_value, **{k.lower(): _finite(v) for k, v in final.extra.items()}}
    else:
        test_metrics, plots = regression_metrics(pred.values, test.y)
        train_value = final.best_score
        gap = overfit_gap(train_value, test_metrics["rmse"], "lower_is_better")
        extra = {k: _finite(v) for k, v in final.extra.items()}
        train_metrics = {"rmse": train_value, "mae": extra.get("MAE"), "r2": extra.get("Rsquared")}
    balance = class_balance_check(SplitPair(train, test, cfg.split_fraction, cfg.split_seed))
    log("evaluate", model.algorithm)

    report = {
        "format": "clinpred-report",
        "version": REPORT_VERSION,
        "kind": "run",
        "endpoint": {"name": cfg.endpoint, "mode": cfg.mode},
        "metric": cfg.metric,
        "seed": cfg.seed,
        "data": {"rows": ds.n_rows, "train_rows": train.n_rows, "test_rows": test.n_rows, "split_fraction": cfg.split_fraction},
        "resampling": {"method": cfg.plan.kind, "number": cfg.plan.number, "seed": cfg.plan.seed},
        "balance": cfg.recipe.balance.kind,
        "balance_check": {
            "train": list(balance.train), "test": list(balance.test),
            "difference": balance.difference, "warning": balance.warning,
        },
        "rfe": rfe_section,
        "comparison": comparison,
        "selected": model.algorithm,
        "selected_point": {k: v for k, v in sorted(model.point.items())},
        "cutoff": {"policy": cfg.cutoff.policy, "value": model.cutoff} if cfg.mode == "classification" else None,
        "train": train_metrics,
        "test": test_metrics,
        "overfit": {"gap": gap.gap, "overfit": gap.overfit, "threshold": gap.threshold},
        "importance": {"names": names, "scores": scores, "raw": raw},
        "plots": plots,
        "test_flagged_rows": sum(1 for f in pred.flags if f),
        "events": [e for e, _ in log.events],
    }
    return report, model


def evaluate_only(model, ds, groups=10, log=None):
    """External validation of a saved model on every row of ``ds``."""
    log = log if log is not None else EventLog()
    log("test:open")
    pred = predict(model, ds)
    if model.mode == "classification":
        metrics, plots = classification_metrics(pred.values, ds.y, model.cutoff, groups)
    else:
        metrics, plots = regression_metrics(pred.values, ds.y)
    log("evaluate", model.algorithm)
    return {
        "format": "clinpred-report",
        "version": REPORT_VERSION,
        "kind": "evaluation",
        "endpoint": {"name": model.outcome, "mode": model.mode},
        "selected": model.algorithm,
        "selected_point": {k: v for k, v in sorted(model.point.items())},
        "cutoff": {"policy": "stored", "value": model.cutoff} if model.mode == "classification" else None,
        "data": {"rows": ds.n_rows},
        "train": {k: _finite(v) for k, v in model.training_metrics.items()},
        "test": metrics,
        "plots": plots,
        "test_flagged_rows": sum(1 for f in pred.flags if f),
        "events": [e for e, _ in log.events],
    }

