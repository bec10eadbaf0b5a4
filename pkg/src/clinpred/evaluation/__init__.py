"""Discrimination, calibration and regression metrics plus recalibration and diagnostics."""
from .calibration import (
    CalibrationReport,
    brier,
    calibration_bins,
    calibration_intercept,
    calibration_report,
    calibration_slope,
    grouped_eci,
    hosmer_lemeshow,
    smoothed_curve,
)
from .diagnostics import OverfitGap, extrapolation_flags, overfit_gap
from .discrimination import (
    ConfusionMatrix,
    DiscriminationReport,
    auc,
    confusion_at,
    discrimination_report,
    optimal_cutoff,
    roc_curve,
)
from .gamma import chi2_sf, gammaincc
from .recalibration import Recalibrator, apply_recalibrator, fit_recalibrator, pava
from .regression import RegressionReport, qq_points, regression_report

__all__ = [
    "CalibrationReport", "ConfusionMatrix", "DiscriminationReport", "OverfitGap", "Recalibrator",
    "RegressionReport", "apply_recalibrator", "auc", "brier", "calibration_bins", "calibration_intercept",
    "calibration_report", "calibration_slope", "chi2_sf", "confusion_at", "discrimination_report",
    "extrapolation_flags", "fit_recalibrator", "gammaincc", "grouped_eci", "hosmer_lemeshow",
    "optimal_cutoff", "overfit_gap", "pava", "qq_points", "regression_report", "roc_curve", "smoothed_curve",
]
