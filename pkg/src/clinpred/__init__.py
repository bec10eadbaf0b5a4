"""Clinical prediction modelling: leakage-safe preprocessing, resampled
tuning, model comparison and discrimination/calibration evaluation for
binary and continuous endpoints.
"""
from .data import Dataset, generate_synthetic_cohort, load_csv, split_train_test, write_csv
from .models import EstimatorSpec, TrainControl, predict, train_tuned
from .preprocess import BalanceStrategy, RecipeConfig
from .resample import ResamplingPlan

__version__ = "0.1.0"

__all__ = [
    "BalanceStrategy", "Dataset", "EstimatorSpec", "RecipeConfig", "ResamplingPlan", "TrainControl",
    "generate_synthetic_cohort", "load_csv", "predict", "split_train_test", "train_tuned", "write_csv",
]
