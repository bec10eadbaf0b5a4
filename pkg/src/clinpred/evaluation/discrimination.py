"""Discrimination metrics: AUC, confusion matrices, ROC curves and cutoffs."""
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from ..errors import InvalidSpec, SingleClass, TargetUnachievable


def _labels(labels):
    y = np.asarray(labels, dtype=float)
    if not np.isin(y, (0.0, 1.0)).all():
        raise InvalidSpec("labels must be 0/1")
    return y


def auc(probs, labels):
    """Mann-Whitney AUC: P(random positive outranks random negative), ties count one half."""
    p = np.asarray(probs, dtype=float)
    y = _labels(labels)
    n1 = int(y.sum())
    n0 = y.size - n1
    if n1 == 0 or n0 == 0:
        raise SingleClass("AUC needs both classes")
    ranks = rankdata(p)
    return float((ranks[y == 1].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise InvalidSpec("confusion matrix counts must be non-negative")

    @property
    def n(self):
        return self.tp + self.fp + self.tn + self.fn

    @property
    def positives(self):
        return self.tp + self.fn

    @property
    def negatives(self):
        return self.tn + self.fp


def confusion_at(probs, labels, cutoff=0.5):
    """Predicted positive iff ``p > cutoff`` (strict)."""
    p = np.asarray(probs, dtype=float)
    y = _labels(labels).astype(bool)
    pred = p > cutoff
    return ConfusionMatrix(
        tp=int(np.sum(pred & y)),
        fp=int(np.sum(pred & ~y)),
        tn=int(np.sum(~pred & ~y)),
        fn=int(np.sum(~pred & y)),
    )


@dataclass(frozen=True)
class DiscriminationReport:
    auc: float
    accuracy: float
    sensitivity: float
    specificity: float
    ppv: float
    npv: float
    f1: float
    cutoff: float = 0.5
    undefined: tuple = field(default=())

    def as_dict(self):
        return {k: getattr(self, k) for k in ("auc", "accuracy", "sensitivity", "specificity", "ppv", "npv", "f1", "cutoff")}


def _ratio(num, den):
    return num / den if den else None


def discrimination_report(cm, auc_value=None, cutoff=0.5):
    """Confusion-matrix metrics.  Zero denominators give ``None`` and are listed in ``undefined``."""
    sens = _ratio(cm.tp, cm.positives)
    spec = _ratio(cm.tn, cm.negatives)
    ppv = _ratio(cm.tp, cm.tp + cm.fp)
    npv = _ratio(cm.tn, cm.tn + cm.fn)
    f1 = None
    if ppv is not None and sens is not None and ppv + sens > 0:
        f1 = 2 * ppv * sens / (ppv + sens)
    values = dict(accuracy=_ratio(cm.tp + cm.tn, cm.n), sensitivity=sens, specificity=spec, ppv=ppv, npv=npv, f1=f1)
    undefined = tuple(k for k, v in values.items() if v is None)
    return DiscriminationReport(auc=auc_value, cutoff=cutoff, undefined=undefined, **values)


def _sorted_counts(probs, labels):
    p = np.asarray(probs, dtype=float)
    y = _labels(labels)
    if y.sum() == 0 or y.sum() == y.size:
        raise SingleClass("ROC analysis needs both classes")
    order = np.argsort(p, kind="stable")
    return p[order], y[order]


def candidate_cutoffs(probs):
    """0, 1 and the midpoints between adjacent distinct scores."""
    u = np.unique(np.asarray(probs, dtype=float))
    return np.unique(np.concatenate([[0.0], (u[:-1] + u[1:]) / 2.0, [1.0]]))


def rates_at(probs, labels, cutoffs):
    """Sensitivity and specificity at each cutoff under the strict ``p > c`` rule."""
    p, y = _sorted_counts(probs, labels)
    pos_cum = np.concatenate([[0.0], np.cumsum(y)])
    n1 = pos_cum[-1]
    n0 = y.size - n1
    k = np.searchsorted(p, cutoffs, side="right")  # rows with p <= c are predicted negative
    fn = pos_cum[k]
    tn = k - fn
    return (n1 - fn) / n1, tn / n0


def roc_curve(probs, labels):
    """ROC points ``(1 - specificity, sensitivity)`` ordered from (0, 0) to (1, 1)."""
    p = np.asarray(probs, dtype=float)
    u = np.unique(p)
    cutoffs = np.concatenate([[np.inf], u[::-1][1:], [-np.inf]]) if u.size > 1 else np.array([np.inf, -np.inf])
    sens, spec = rates_at(p, labels, cutoffs)
    return np.column_stack([1.0 - spec, sens])


def optimal_cutoff(probs, labels, mode="balanced", target=None):
    """Choose a classification cutoff on training predictions.

    ``balanced`` minimizes ``(1 - sens)**2 + (1 - spec)**2`` (closest to the
    top-left ROC corner; the lowest cutoff wins ties), ``rule_in`` returns the
    smallest cutoff reaching specificity >= target and ``rule_out`` the largest
    cutoff keeping sensitivity >= target.
    """
    cuts = candidate_cutoffs(probs)
    sens, spec = rates_at(probs, labels, cuts)
    if mode == "balanced":
        dist = (1 - sens) ** 2 + (1 - spec) ** 2
        return float(cuts[np.argmin(dist)])
    if target is None:
        raise InvalidSpec(f"{mode} needs a target")
    if mode == "rule_in":
        ok = np.flatnonzero(spec >= target)
        if ok.size == 0:
            raise TargetUnachievable(f"no cutoff reaches specificity {target}")
        return float(cuts[ok[0]])
    if mode == "rule_out":
        ok = np.flatnonzero(sens >= target)
        if ok.size == 0:
            raise TargetUnachievable(f"no cutoff reaches sensitivity {target}")
        return float(cuts[ok[-1]])
    raise InvalidSpec(f"unknown cutoff mode {mode!r}")
