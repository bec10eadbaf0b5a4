"""Regression metrics and quantile-quantile points."""
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidSpec, TooFewRows


@dataclass(frozen=True)
class RegressionReport:
    rmse: float
    mae: float
    r2: float
    undefined: tuple = field(default=())

    def as_dict(self):
        return {"rmse": self.rmse, "mae": self.mae, "r2": self.r2}


def regression_report(preds, trues):
    """RMSE (n denominator), MAE and R-squared as the squared Pearson correlation.

    R-squared is ``None`` and listed in ``undefined`` when either series is constant.
    """
    p = np.asarray(preds, dtype=float)
    t = np.asarray(trues, dtype=float)
    if p.shape != t.shape:
        raise InvalidSpec("predictions and truths differ in length")
    if p.size < 2:
        raise TooFewRows("regression metrics need at least two rows")
    r = p - t
    rmse = float(np.sqrt(np.mean(r * r)))
    mae = float(np.mean(np.abs(r)))
    pc, tc = p - p.mean(), t - t.mean()
    den = np.sqrt((pc @ pc) * (tc @ tc))
    if den == 0:
        return RegressionReport(rmse, mae, None, ("r2",))
    return RegressionReport(rmse, mae, float((pc @ tc / den) ** 2))


def qq_points(preds, trues, q=100):
    """``q`` paired empirical quantiles at evenly spaced levels from 0 to 1 (linear interpolation)."""
    levels = np.linspace(0.0, 1.0, q)
    return np.column_stack([np.quantile(np.asarray(preds, float), levels), np.quantile(np.asarray(trues, float), levels)])
