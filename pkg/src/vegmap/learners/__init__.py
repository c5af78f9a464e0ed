"""Classifiers, metrics, and validation for tile cover classes."""

from .base import (
    KINDS,
    LabeledDataset,
    LearnerConfig,
    Model,
    TrainingError,
    fit,
    load_model,
    model_from_json,
)
from .metrics import (
    ConfusionMatrix,
    auc,
    binary_auc,
    class_accuracy,
    compute_all,
    confusion,
    f1,
    log_loss,
    precision,
    predicted_labels,
    recall,
    specificity,
)
from .validation import (
    METRIC_COLUMNS,
    CoverageReport,
    CvReport,
    CvRow,
    LooRecord,
    cross_validate,
    focus_coverage,
    loo_validate,
    stratified_folds,
)

__all__ = [
    "KINDS",
    "LabeledDataset",
    "LearnerConfig",
    "Model",
    "TrainingError",
    "fit",
    "load_model",
    "model_from_json",
    "ConfusionMatrix",
    "auc",
    "binary_auc",
    "class_accuracy",
    "compute_all",
    "confusion",
    "f1",
    "log_loss",
    "precision",
    "predicted_labels",
    "recall",
    "specificity",
    "METRIC_COLUMNS",
    "CoverageReport",
    "CvReport",
    "CvRow",
    "LooRecord",
    "cross_validate",
    "focus_coverage",
    "loo_validate",
    "stratified_folds",
]
