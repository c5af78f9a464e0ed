"""Stratified evaluation: k-fold cross-validation, leave-one-out sampling on a
random tile subset, and the multi-model focus-class coverage union."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..features import FeatureMatrix
from ..tiling import TileSpec
from .base import LabeledDataset, LearnerConfig, Model, fit
from .metrics import compute_all, predicted_labels

METRIC_COLUMNS = ("AUC", "CA", "F1", "Precision", "Recall", "LogLoss", "Specificity")


def stratified_folds(labels: list[str], k: int, seed: int = 0) -> np.ndarray:
    """Per-row fold ids in [0, k): seeded shuffle within each class, then
    round-robin, so per-fold class counts differ by at most one."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    rng = np.random.default_rng(seed)
    folds = np.empty(len(labels), dtype=np.int64)
    y = np.array(labels)
    for name in sorted(set(labels)):
        idx = np.flatnonzero(y == name)
        if len(idx) < k:
            raise ValueError(f"class {name!r} has {len(idx)} rows, fewer than k={k}")
        idx = rng.permutation(idx)
        folds[idx] = np.arange(len(idx)) % k
    return folds


@dataclass
class CvRow:
    learner: str
    dataset: str
    train_time: float
    test_time: float
    metrics: dict | None
    error: str | None = None
    # pooled held-out predictions, dataset order; lets callers build the
    # confusion matrix without refitting
    predicted: list[str] | None = None


@dataclass
class CvReport:
    rows: list[CvRow] = field(default_factory=list)

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["learner", "dataset", "train_time", "test_time", *METRIC_COLUMNS])
        for row in self.rows:
            cells = [row.learner, row.dataset, f"{row.train_time:.6f}", f"{row.test_time:.6f}"]
            if row.metrics is None:
                cells += [""] * len(METRIC_COLUMNS)
            else:
                cells += [repr(row.metrics[m]) for m in METRIC_COLUMNS]
            w.writerow(cells)
        return out.getvalue()

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")


def cross_validate(
    cfgs: list[LearnerConfig],
    data: LabeledDataset,
    k: int = 3,
    seed: int = 0,
    dataset_name: str = "dataset",
) -> CvReport:
    """Pool each learner's held-out fold predictions, then score once.

    A learner that fails to fit contributes an error row; the others still run.
    """
    data.check_trainable()
    folds = stratified_folds(data.labels, k, seed)
    report = CvReport()
    for cfg in cfgs:
        pooled = np.zeros((len(data.labels), len(data.class_list)))
        train_time = test_time = 0.0
        try:
            for fold in range(k):
                held = np.flatnonzero(folds == fold)
                rest = np.flatnonzero(folds != fold)
                t0 = time.perf_counter()
                model = fit(cfg, data.subset(rest))
                t1 = time.perf_counter()
                pooled[held] = model.predict_proba(data.matrix.values[held])
                test_time += time.perf_counter() - t1
                train_time += t1 - t0
        except Exception as exc:
            report.rows.append(CvRow(cfg.kind, dataset_name, train_time, test_time, None, str(exc)))
            continue
        metrics = compute_all(data.labels, pooled, data.class_list)
        predicted = predicted_labels(pooled, data.class_list)
        report.rows.append(CvRow(cfg.kind, dataset_name, train_time, test_time, metrics, predicted=predicted))
    return report


@dataclass
class LooRecord:
    tile: TileSpec
    actual: str
    predicted: str
    probability: float
    probs: list[float]


def _stratified_sample(labels: list[str], fraction: float, rng) -> np.ndarray:
    """ceil(fraction*N) row indices, apportioned per class by largest remainder."""
    n = len(labels)
    target = math.ceil(fraction * n)
    y = np.array(labels)
    names = sorted(set(labels))
    quotas = {name: fraction * (y == name).sum() for name in names}
    take = {name: min(int(math.floor(q)), int((y == name).sum())) for name, q in quotas.items()}
    remainders = sorted(names, key=lambda m: (-(quotas[m] - take[m]), m))
    i = 0
    while sum(take.values()) < target and i < 10 * len(names):
        name = remainders[i % len(names)]
        if take[name] < int((y == name).sum()):
            take[name] += 1
        i += 1
    picked = []
    for name in names:
        idx = np.flatnonzero(y == name)
        picked.extend(rng.permutation(idx)[: take[name]])
    return np.sort(np.array(picked, dtype=np.int64))[:target] if len(picked) > target else np.sort(
        np.array(picked, dtype=np.int64)
    )


def loo_validate(
    cfg: LearnerConfig,
    data: LabeledDataset,
    fraction: float = 0.10,
    seed: int = 0,
) -> list[LooRecord]:
    """For each sampled row, train on the other N-1 rows and record the
    predicted class with its probability."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    if len(data.labels) < 2:
        raise ValueError("leave-one-out needs at least two rows")
    rng = np.random.default_rng(seed)
    sample = _stratified_sample(data.labels, fraction, rng)
    records = []
    for row in sample:
        rest = [i for i in range(len(data.labels)) if i != row]
        model = fit(cfg, data.subset(rest))
        probs = model.predict_proba(data.matrix.values[row])
        best = int(np.argmax(probs))
        records.append(
            LooRecord(
                data.matrix.tiles[row],
                data.labels[row],
                data.class_list[best],
                float(probs[best]),
                [float(p) for p in probs],
            )
        )
    return records


@dataclass
class CoverageReport:
    focus: str
    per_model: list[list[TileSpec]]
    union: list[TileSpec]
    total: int

    @property
    def fraction(self) -> float:
        return len(self.union) / self.total


def focus_coverage(
    models: list[Model],
    tiles: FeatureMatrix,
    focus: str,
    thresholds: list[float],
) -> CoverageReport:
    """Tiles each model assigns the focus class with probability above its
    threshold, plus the union fraction over all tiles."""
    if len(models) != len(thresholds):
        raise ValueError(f"{len(models)} models but {len(thresholds)} thresholds")
    if not models:
        raise ValueError("focus_coverage needs at least one model")
    if len(tiles) == 0:
        raise ValueError("focus_coverage needs at least one tile")
    for t in thresholds:
        if not 0.0 <= t < 1.0:
            raise ValueError(f"thresholds must lie in [0, 1), got {t}")
    per_model = []
    union: dict[tuple, TileSpec] = {}
    for model, threshold in zip(models, thresholds):
        if focus not in model.class_list:
            raise ValueError(f"model {model.kind} does not know class {focus!r}")
        probs = model.predict_proba_matrix(tiles)
        col = model.class_list.index(focus)
        accepted = [tiles.tiles[i] for i in np.flatnonzero(probs[:, col] > threshold)]
        per_model.append(accepted)
        union.update({t.key(): t for t in accepted})
    ordered = [union[k] for k in sorted(union)]
    return CoverageReport(focus, per_model, ordered, len(tiles))
