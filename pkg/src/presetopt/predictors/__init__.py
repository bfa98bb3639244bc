"""Supervised predictors: transcoding time regression and R-D class prediction."""

from .classify import RDClassModel, RDRow, SVMParams, Standardizer, classify_rd, train_rd_classifier
from .timing import (
    GBDTParams,
    TimeModel,
    TimeRow,
    predict_time,
    predict_times,
    select_time_features,
    train_time_regressor,
)
from .validation import (
    CVResult,
    RegressionMetrics,
    kfold_cv,
    kfold_indices,
    mape,
    regression_metrics,
    rfecv,
)

__all__ = [
    "CVResult",
    "GBDTParams",
    "RDClassModel",
    "RDRow",
    "RegressionMetrics",
    "SVMParams",
    "Standardizer",
    "TimeModel",
    "TimeRow",
    "classify_rd",
    "kfold_cv",
    "kfold_indices",
    "mape",
    "predict_time",
    "predict_times",
    "regression_metrics",
    "rfecv",
    "select_time_features",
    "train_rd_classifier",
    "train_time_regressor",
]
