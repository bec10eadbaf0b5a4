"""Recalibration maps fitted on held-out predictions: intercept update, Platt, isotonic."""
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidSpec, SingleClass
from ..models.linear import _sigmoid, irls_logistic
from .calibration import logit


def pava(values, weights=None):
    """Weighted isotonic (non-decreasing) least-squares fit by pool-adjacent-violators."""
    v = np.asarray(values, dtype=float)
    w = np.ones(v.size) if weights is None else np.asarray(weights, dtype=float)
    means, wts, sizes = [], [], []
    for x, wt in zip(v, w):
        means.append(x)
        wts.append(wt)
        sizes.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            m2, w2, s2 = means.pop(), wts.pop(), sizes.pop()
            tot = wts[-1] + w2
            means[-1] = (means[-1] * wts[-1] + m2 * w2) / tot
            wts[-1] = tot
            sizes[-1] += s2
    return np.repeat(means, sizes)


@dataclass(frozen=True, eq=False)
class Recalibrator:
    """``kind`` is intercept_update (c), platt (a, b) or isotonic (breakpoints, levels)."""

    kind: str
    c: float = 0.0
    a: float = 0.0
    b: float = 1.0
    breakpoints: np.ndarray = None
    levels: np.ndarray = None


def fit_recalibrator(probs, labels, method="intercept_update"):
    p = np.asarray(probs, dtype=float)
    y = np.asarray(labels, dtype=float)
    if y.sum() == 0 or y.sum() == y.size:
        raise SingleClass("recalibration needs both classes")
    lp = logit(p)
    if method == "intercept_update":
        res = irls_logistic(np.ones((p.size, 1)), y, offset=lp)
        return Recalibrator("intercept_update", c=float(res.coef[0]))
    if method == "platt":
        res = irls_logistic(np.column_stack([np.ones(p.size), lp]), y)
        return Recalibrator("platt", a=float(res.coef[0]), b=float(res.coef[1]))
    if method == "isotonic":
        order = np.argsort(p, kind="stable")
        xs, ys = p[order], y[order]
        # tied predictions must share one fitted level: pool them first
        ux, start = np.unique(xs, return_index=True)
        counts = np.diff(np.append(start, xs.size))
        sums = np.add.reduceat(ys, start)
        levels = pava(sums / counts, counts)
        return Recalibrator("isotonic", breakpoints=ux, levels=levels)
    raise InvalidSpec(f"unknown recalibration method {method!r}")


def apply_recalibrator(r, probs):
    """Map probabilities; isotonic is a right-continuous step function, flat outside its range."""
    p = np.asarray(probs, dtype=float)
    if r.kind == "intercept_update":
        out = _sigmoid(logit(p) + r.c)
    elif r.kind == "platt":
        out = _sigmoid(r.a + r.b * logit(p))
    elif r.kind == "isotonic":
        idx = np.searchsorted(r.breakpoints, p, side="right") - 1
        out = r.levels[np.clip(idx, 0, r.levels.size - 1)]
    else:
        raise InvalidSpec(f"unknown recalibrator kind {r.kind!r}")
    return np.clip(out, 0.0, 1.0)
