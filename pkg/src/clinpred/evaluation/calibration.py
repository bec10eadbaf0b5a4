"""Calibration metrics: intercept, slope, Brier, E/O, grouped ECI and Hosmer-Lemeshow."""
import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import EmptyExpected, MergedGroupWarning, SingleClass, TooFewRows
from ..models.linear import irls_logistic
from .gamma import chi2_sf

CLIP = 1e-10
HL_NOTE = "p > 0.2 is usually read as fair calibration"


def logit(p):
    p = np.clip(np.asarray(p, dtype=float), CLIP, 1 - CLIP)
    return np.log(p) - np.log1p(-p)


def _checked(probs, labels):
    p = np.asarray(probs, dtype=float)
    y = np.asarray(labels, dtype=float)
    if p.shape != y.shape:
        raise TooFewRows("probabilities and labels differ in length")
    if y.sum() == 0 or y.sum() == y.size:
        raise SingleClass("calibration needs both classes")
    return p, y


def equal_count_groups(probs, g):
    """Row positions split into ``g`` groups of sizes differing by at most one, ordered by p.

    Ties keep their input order (stable sort), so the concatenated groups
    restore the sorted sample.
    """
    order = np.argsort(np.asarray(probs, dtype=float), kind="stable")
    return np.array_split(order, g)


def calibration_slope(probs, labels):
    lp = logit(probs)
    res = irls_logistic(np.column_stack([np.ones(lp.size), lp]), labels)
    return float(res.coef[1])


def calibration_intercept(probs, labels):
    """Calibration-in-the-large: intercept of a refit with ``logit(p)`` as a fixed offset."""
    lp = logit(probs)
    res = irls_logistic(np.ones((lp.size, 1)), labels, offset=lp)
    return float(res.coef[0])


def brier(probs, labels):
    p = np.asarray(probs, dtype=float)
    return float(np.mean((p - np.asarray(labels, dtype=float)) ** 2))


@dataclass(frozen=True)
class CalibrationBin:
    mean_predicted: float
    observed: float
    count: int


@dataclass(frozen=True)
class CalibrationReport:
    intercept: float
    slope: float
    brier: float
    eo_ratio: float
    eci: float
    hl_stat: float
    hl_p: float
    hl_df: int
    bins: tuple
    note: str = HL_NOTE

    def as_dict(self):
        keys = ("intercept", "slope", "brier", "eo_ratio", "eci", "hl_stat", "hl_p")
        return {k: getattr(self, k) for k in keys}


def calibration_bins(probs, labels, g=10):
    p = np.asarray(probs, dtype=float)
    y = np.asarray(labels, dtype=float)
    return tuple(
        CalibrationBin(float(p[idx].mean()), float(y[idx].mean()), int(idx.size))
        for idx in equal_count_groups(p, g)
    )


def grouped_eci(probs, labels, g=10):
    """100 x mean squared gap between each prediction and its bin's observed fraction."""
    p = np.asarray(probs, dtype=float)
    y = np.asarray(labels, dtype=float)
    total = 0.0
    for idx in equal_count_groups(p, g):
        total += np.sum((p[idx] - y[idx].mean()) ** 2)
    return float(100.0 * total / p.size)


def hosmer_lemeshow(probs, labels, g=10):
    """Return ``(statistic, p_value, df)`` over ``g`` equal-count groups, df = groups - 2.

    A group whose variance term ``E (1 - E / n)`` is zero is merged into its
    neighbour (with a :class:`MergedGroupWarning`); :class:`EmptyExpected` is
    raised when fewer than three usable groups remain.
    """
    p, y = np.asarray(probs, dtype=float), np.asarray(labels, dtype=float)
    if p.size < 2 * g:
        raise TooFewRows(f"Hosmer-Lemeshow with g={g} needs at least {2 * g} rows, got {p.size}")
    groups = [[float(y[i].sum()), float(p[i].sum()), int(i.size)] for i in equal_count_groups(p, g)]
    merged = []
    for grp in groups:
        merged.append(grp)
        while len(merged) > 1 and _variance(merged[-1]) <= 0:
            last = merged.pop()
            merged[-1] = [a + b for a, b in zip(merged[-1], last)]
    while len(merged) > 1 and _variance(merged[0]) <= 0:
        first = merged.pop(0)
        merged[0] = [a + b for a, b in zip(first, merged[0])]
    if len(merged) < len(groups):
        warnings.warn(f"merged {len(groups) - len(merged)} degenerate group(s)", MergedGroupWarning, stacklevel=2)
    if len(merged) < 3 or any(_variance(m) <= 0 for m in merged):
        raise EmptyExpected("too few groups with non-zero expected variance")
    stat = float(sum((o - e) ** 2 / _variance([o, e, n]) for o, e, n in merged))
    df = len(merged) - 2
    return stat, chi2_sf(stat, df), df


def _variance(group):
    _, e, n = group
    return e * (1.0 - e / n)


def calibration_report(probs, labels, g=10):
    p, y = _checked(probs, labels)
    if p.size < g:
        raise TooFewRows(f"need at least g={g} rows")
    try:
        hl_stat, hl_p, hl_df = hosmer_lemeshow(p, y, g)
    except (TooFewRows, EmptyExpected):
        hl_stat, hl_p, hl_df = float("nan"), float("nan"), 0
    return CalibrationReport(
        intercept=calibration_intercept(p, y),
        slope=calibration_slope(p, y),
        brier=brier(p, y),
        eo_ratio=float(p.sum() / y.sum()),
        eci=grouped_eci(p, y, g),
        hl_stat=hl_stat,
        hl_p=hl_p,
        hl_df=hl_df,
        bins=calibration_bins(p, y, g),
    )


def smoothed_curve(probs, labels, n_points=101, bandwidth=None):
    """Nadaraya-Watson estimate of the observed rate as a function of predicted risk."""
    p = np.asarray(probs, dtype=float)
    y = np.asarray(labels, dtype=float)
    if bandwidth is None:
        sd = p.std(ddof=1) if p.size > 1 else 0.1
        bandwidth = max(1.06 * sd * p.size ** (-0.2), 1e-3)
    grid = np.linspace(p.min(), p.max(), n_points)
    fitted = np.empty(n_points)
    for i, x in enumerate(grid):
        k = np.exp(-0.5 * ((p - x) / bandwidth) ** 2)
        fitted[i] = k @ y / k.sum() if k.sum() > 0 else np.nan
    return grid, fitted
