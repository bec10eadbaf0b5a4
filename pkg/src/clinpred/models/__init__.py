"""Estimators, solver kernels, tuning and prediction."""
from .bayes import NaiveBayes, nb_fit
from .estimators import ALGORITHMS, SIMPLICITY, EstimatorSpec, Fit, default_grid, fit_grid, fit_point
from .knn import KnnModel, knn_fit
from .linear import elastic_net_solve, irls_logistic, logistic_elastic_net, ols_solve
from .trees import Boosted, Forest, Tree, cart_grow, forest_fit, gbm_fit, gini_decrease
from .tuning import (
    FORMAT_VERSION,
    FittedModel,
    Predictions,
    TrainControl,
    TrainedResult,
    fit_final,
    predict,
    train_tuned,
)

__all__ = [
    "ALGORITHMS", "Boosted", "EstimatorSpec", "FORMAT_VERSION", "Fit", "FittedModel", "Forest", "KnnModel",
    "NaiveBayes", "Predictions", "SIMPLICITY", "TrainControl", "TrainedResult", "Tree", "cart_grow",
    "default_grid", "elastic_net_solve", "fit_final", "fit_grid", "fit_point", "forest_fit", "gbm_fit",
    "gini_decrease", "irls_logistic", "knn_fit", "logistic_elastic_net", "nb_fit", "ols_solve", "predict",
    "train_tuned",
]
