"""Generalization diagnostics: train/test gap and extrapolation checks."""
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidSpec


@dataclass(frozen=True)
class OverfitGap:
    gap: float
    overfit: bool
    threshold: float


def overfit_gap(train_metric, test_metric, kind="higher_is_better", threshold=None):
    """Positive gap means worse performance on the test cohort.

    Defaults: an absolute threshold of 0.05 for higher-is-better metrics
    (AUC and friends) and 10% of the training value for lower-is-better ones.
    """
    if kind == "higher_is_better":
        gap = train_metric - test_metric
        limit = 0.05 if threshold is None else threshold
    elif kind == "lower_is_better":
        gap = test_metric - train_metric
        limit = 0.10 * abs(train_metric) if threshold is None else threshold
    else:
        raise InvalidSpec(f"unknown metric direction {kind!r}")
    return OverfitGap(float(gap), bool(gap > limit), float(limit))


def extrapolation_flags(model, ds):
    """Per row, the feature names whose value lies outside what training saw.

    ``model`` needs ``feature_ranges`` (name -> (min, max)) and ``levels``
    (name -> tuple of seen codes).  Missing cells are never flagged.
    """
    flags = [[] for _ in range(ds.n_rows)]
    for name, (lo, hi) in model.feature_ranges.items():
        if name not in ds.names:
            continue
        j = ds.index(name)
        x = ds.values[:, j]
        bad = ~ds.missing[:, j] & ((x < lo) | (x > hi))
        for i in np.flatnonzero(bad):
            flags[i].append(name)
    for name, levels in model.levels.items():
        if name not in ds.names:
            continue
        j = ds.index(name)
        bad = ~ds.missing[:, j] & ~np.isin(ds.values[:, j], np.asarray(levels, dtype=float))
        for i in np.flatnonzero(bad):
            flags[i].append(name)
    order = {n: k for k, n in enumerate(ds.names)}
    return [tuple(sorted(f, key=order.get)) for f in flags]
