"""The seven report metrics and the confusion matrix.

Multiclass scores reduce one-vs-rest per class, weighted by class prevalence
in the actual labels; classes that never occur get weight zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

PROB_CLIP = 1e-15


def _check(labels, probs, class_list):
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2 or probs.shape != (len(labels), len(class_list)):
        raise ValueError(f"expected probs of shape ({len(labels)}, {len(class_list)}), got {probs.shape}")
    if len(labels) < 1:
        raise ValueError("metrics need at least one prediction")
    if (probs < 0).any() or (np.abs(probs.sum(axis=1) - 1.0) > 1e-6).any():
        raise ValueError("probability rows must be non-negative and sum to 1")
    extra = set(labels) - set(class_list)
    if extra:
        raise ValueError(f"labels outside class_list: {sorted(extra)}")
    return probs


def binary_auc(scores: np.ndarray, positive: np.ndarray) -> float:
    """Mann-Whitney AUC with average ranks on tied scores."""
    n_pos = int(positive.sum())
    n_neg = len(positive) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("binary AUC needs both a positive and a negative example")
    ranks = rankdata(scores)
    return float((ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def auc(labels: list[str], probs, class_list: list[str]) -> float:
    probs = _check(labels, probs, class_list)
    y = np.array(labels)
    total = 0.0
    for c, name in enumerate(class_list):
        positive = y == name
        n_pos = int(positive.sum())
        if n_pos == 0 or n_pos == len(y):
            continue  # one-sided class carries no ranking information
        total += n_pos / len(y) * binary_auc(probs[:, c], positive)
    return total


def predicted_labels(probs, class_list: list[str]) -> list[str]:
    probs = np.asarray(probs, dtype=np.float64)
    return [class_list[i] for i in np.argmax(probs, axis=1)]


def class_accuracy(actual: list[str], predicted: list[str]) -> float:
    if len(actual) != len(predicted):
        raise ValueError("actual and predicted lengths differ")
    if not actual:
        raise ValueError("metrics need at least one prediction")
    return sum(a == p for a, p in zip(actual, predicted)) / len(actual)


def _binary_counts(actual, predicted, name):
    tp = sum(1 for a, p in zip(actual, predicted) if a == name and p == name)
    fp = sum(1 for a, p in zip(actual, predicted) if a != name and p == name)
    fn = sum(1 for a, p in zip(actual, predicted) if a == name and p != name)
    tn = len(actual) - tp - fp - fn
    return tp, fp, fn, tn


def _weighted(actual, predicted, class_list, per_class):
    if len(actual) != len(predicted):
        raise ValueError("actual and predicted lengths differ")
    n = len(actual)
    if n == 0:
        raise ValueError("metrics need at least one prediction")
    total = 0.0
    for name in class_list:
        weight = sum(1 for a in actual if a == name) / n
        if weight > 0.0:
            total += weight * per_class(*_binary_counts(actual, predicted, name))
    return total


def precision(actual, predicted, class_list) -> float:
    return _weighted(actual, predicted, class_list, lambda tp, fp, fn, tn: tp / (tp + fp) if tp + fp else 0.0)


def recall(actual, predicted, class_list) -> float:
    return _weighted(actual, predicted, class_list, lambda tp, fp, fn, tn: tp / (tp + fn) if tp + fn else 0.0)


def specificity(actual, predicted, class_list) -> float:
    return _weighted(actual, predicted, class_list, lambda tp, fp, fn, tn: tn / (tn + fp) if tn + fp else 0.0)


def f1(actual, predicted, class_list) -> float:
    def per_class(tp, fp, fn, tn):
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        return 2.0 * p * r / (p + r) if p + r else 0.0

    return _weighted(actual, predicted, class_list, per_class)


def log_loss(labels: list[str], probs, class_list: list[str]) -> float:
    probs = _check(labels, probs, class_list)
    lookup = {c: i for i, c in enumerate(class_list)}
    picked = probs[np.arange(len(labels)), [lookup[l] for l in labels]]
    return float(-np.log(np.clip(picked, PROB_CLIP, 1.0 - PROB_CLIP)).mean())


def compute_all(labels: list[str], probs, class_list: list[str]) -> dict:
    """The seven report metrics from pooled probabilities, keyed by column name."""
    predicted = predicted_labels(probs, class_list)
    return {
        "AUC": auc(labels, probs, class_list),
        "CA": class_accuracy(labels, predicted),
        "F1": f1(labels, predicted, class_list),
        "Precision": precision(labels, predicted, class_list),
        "Recall": recall(labels, predicted, class_list),
        "LogLoss": log_loss(labels, probs, class_list),
        "Specificity": specificity(labels, predicted, class_list),
    }


@dataclass
class ConfusionMatrix:
    """counts[predicted][actual]; percents normalize each actual-class column."""

    classes: list[str]
    counts: np.ndarray
    percent: np.ndarray

    def to_json(self) -> str:
        return json.dumps(
            {
                "classes": self.classes,
                "counts": self.counts.tolist(),
                "percent": [[round(v, 6) for v in row] for row in self.percent],
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "ConfusionMatrix":
        raw = json.loads(text)
        return cls(list(raw["classes"]), np.array(raw["counts"], dtype=np.int64), np.array(raw["percent"]))


def confusion(actual: list[str], predicted: list[str], class_list: list[str] | None = None) -> ConfusionMatrix:
    if len(actual) != len(predicted):
        raise ValueError("actual and predicted lengths differ")
    classes = class_list or sorted(set(actual) | set(predicted))
    lookup = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for a, p in zip(actual, predicted):
        counts[lookup[p], lookup[a]] += 1
    col = counts.sum(axis=0, keepdims=True).astype(np.float64)
    percent = np.divide(counts * 100.0, col, out=np.zeros_like(counts, dtype=np.float64), where=col > 0)
    return ConfusionMatrix(list(classes), counts, percent)
