"""Shared learner plumbing: datasets, configs, and the model JSON envelope."""

from __future__ import annotations

import abc
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..features import FeatureMatrix

MODEL_FORMAT_VERSION = 1

KINDS = ("kNN", "LogisticRegression", "Tree", "RandomForest", "NeuralNetwork", "SVM")

_DEFAULT_HYPERPARAMETERS = {
    "kNN": {"k": 5},
    "LogisticRegression": {"l2": 1.0, "tol": 1e-6, "max_iter": 1000},
    "Tree": {"max_depth": 100, "min_split": 5, "min_leaf": 2},
    "RandomForest": {
        "n_trees": 10,
        "bootstrap": True,
        "max_features": "sqrt",
        "max_depth": 100,
        "min_split": 5,
        "min_leaf": 2,
    },
    "NeuralNetwork": {
        "hidden": 100,
        "l2": 1e-4,
        "epochs": 200,
        "learning_rate": 1e-3,
        "batch_size": 32,
    },
    "SVM": {"C": 1.0, "gamma": "auto", "tol": 1e-3, "max_passes": 5},
}


class TrainingError(ValueError):
    """Raised when a dataset or configuration cannot produce a model."""


@dataclass
class LabeledDataset:
    """A feature matrix with one cover-class label per row."""

    matrix: FeatureMatrix
    labels: list[str]
    class_list: list[str]

    def __post_init__(self):
        if len(self.labels) != len(self.matrix):
            raise TrainingError(f"{len(self.matrix)} rows but {len(self.labels)} labels")
        if len(set(self.class_list)) != len(self.class_list):
            raise TrainingError("class_list contains duplicates")
        extra = set(self.labels) - set(self.class_list)
        if extra:
            raise TrainingError(f"labels outside class_list: {sorted(extra)}")

    @classmethod
    def build(cls, matrix: FeatureMatrix, labels: list[str], class_list: list[str] | None = None):
        return cls(matrix, list(labels), class_list or sorted(set(labels)))

    def check_trainable(self) -> None:
        present = set(self.labels)
        if len(present) < 2:
            raise TrainingError(f"training needs >= 2 classes, found {sorted(present)}")
        if len(self.labels) < len(self.class_list):
            raise TrainingError(f"{len(self.labels)} rows for {len(self.class_list)} classes")
        if self.matrix.dim < 1:
            raise TrainingError("dataset has zero features")

    def y_indices(self) -> np.ndarray:
        lookup = {c: i for i, c in enumerate(self.class_list)}
        return np.array([lookup[l] for l in self.labels], dtype=np.int64)

    def subset(self, indices) -> "LabeledDataset":
        idx = list(indices)
        return LabeledDataset(self.matrix.subset(idx), [self.labels[i] for i in idx], list(self.class_list))


@dataclass
class LearnerConfig:
    """Which classifier to train and how; unset hyperparameters take defaults."""

    kind: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown learner kind {self.kind!r}; expected one of {KINDS}")
        defaults = _DEFAULT_HYPERPARAMETERS[self.kind]
        unknown = set(self.hyperparameters) - set(defaults)
        if unknown:
            raise ValueError(f"{self.kind} does not accept hyperparameters {sorted(unknown)}")
        merged = {**defaults, **self.hyperparameters}
        _validate_hyperparameters(self.kind, merged)
        self.hyperparameters = merged


def _validate_hyperparameters(kind: str, hp: dict) -> None:
    def positive(name, integer=True):
        val = hp[name]
        ok = isinstance(val, int) and not isinstance(val, bool) if integer else val > 0
        if integer and (not ok or val < 1):
            raise ValueError(f"{kind}: {name} must be an integer >= 1, got {val!r}")
        if not integer and not val > 0:
            raise ValueError(f"{kind}: {name} must be > 0, got {val!r}")

    if kind == "kNN":
        positive("k")
    elif kind == "LogisticRegression":
        if hp["l2"] < 0:
            raise ValueError(f"l2 must be >= 0, got {hp['l2']!r}")
        positive("tol", integer=False)
        positive("max_iter")
    elif kind in ("Tree", "RandomForest"):
        positive("max_depth")
        positive("min_split")
        positive("min_leaf")
        if kind == "RandomForest":
            positive("n_trees")
            if hp["max_features"] not in ("sqrt", "all"):
                raise ValueError(f"max_features must be 'sqrt' or 'all', got {hp['max_features']!r}")
    elif kind == "NeuralNetwork":
        positive("hidden")
        positive("epochs")
        positive("batch_size")
        positive("learning_rate", integer=False)
        if hp["l2"] < 0:
            raise ValueError(f"l2 must be >= 0, got {hp['l2']!r}")
    elif kind == "SVM":
        positive("C", integer=False)
        positive("tol", integer=False)
        positive("max_passes")
        if hp["gamma"] != "auto" and not (isinstance(hp["gamma"], (int, float)) and hp["gamma"] > 0):
            raise ValueError(f"gamma must be 'auto' or > 0, got {hp['gamma']!r}")


class Model(abc.ABC):
    """A fitted classifier; immutable, safe to share across threads."""

    kind: str

    def __init__(self, class_list: list[str], layout_id: str, seed: int):
        self.class_list = list(class_list)
        self.layout_id = layout_id
        self.seed = seed

    @abc.abstractmethod
    def _proba(self, x: np.ndarray) -> np.ndarray:
        """Class probabilities for a (n, d) batch; rows sum to 1."""

    @abc.abstractmethod
    def _parameters(self) -> dict:
        """JSON-ready learned parameters."""

    @classmethod
    @abc.abstractmethod
    def _restore(cls, class_list, layout_id, seed, parameters) -> "Model":
        ...

    @property
    def dim(self) -> int:
        return int(self._dim)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise ValueError(f"model expects {self.dim} features, got shape {x.shape}")
        p = self._proba(x)
        return p[0] if single else p

    def predict_proba_matrix(self, matrix: FeatureMatrix) -> np.ndarray:
        if matrix.layout_id != self.layout_id:
            raise ValueError(f"layout mismatch: model {self.layout_id!r}, features {matrix.layout_id!r}")
        return self.predict_proba(matrix.values)

    def predict(self, x: np.ndarray) -> list[str] | str:
        p = self.predict_proba(x)
        if p.ndim == 1:
            return self.class_list[int(np.argmax(p))]
        return [self.class_list[i] for i in np.argmax(p, axis=1)]

    def to_json(self) -> str:
        return json.dumps(
            {
                "format_version": MODEL_FORMAT_VERSION,
                "kind": self.kind,
                "class_list": self.class_list,
                "layout_id": self.layout_id,
                "seed": self.seed,
                "parameters": self._parameters(),
            },
            sort_keys=True,
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")


def fit(cfg: LearnerConfig, data: LabeledDataset) -> Model:
    """Train one classifier; deterministic given (cfg, data)."""
    data.check_trainable()
    from . import forest, knn, logistic, mlp, svm, tree

    trainer = {
        "kNN": knn.fit_knn,
        "LogisticRegression": logistic.fit_logistic,
        "Tree": tree.fit_tree,
        "RandomForest": forest.fit_forest,
        "NeuralNetwork": mlp.fit_mlp,
        "SVM": svm.fit_svm,
    }[cfg.kind]
    return trainer(cfg, data)


def model_from_json(text: str) -> Model:
    from . import forest, knn, logistic, mlp, svm, tree

    raw = json.loads(text)
    version = raw.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format_version {version!r}")
    classes = {
        "kNN": knn.KnnModel,
        "LogisticRegression": logistic.LogisticModel,
        "Tree": tree.TreeModel,
        "RandomForest": forest.ForestModel,
        "NeuralNetwork": mlp.MlpModel,
        "SVM": svm.SvmModel,
    }
    kind = raw.get("kind")
    if kind not in classes:
        raise ValueError(f"unknown model kind {kind!r}")
    return classes[kind]._restore(
        list(raw["class_list"]), str(raw["layout_id"]), int(raw["seed"]), raw["parameters"]
    )


def load_model(path: str | Path) -> Model:
    return model_from_json(Path(path).read_text(encoding="utf-8"))


class Scaler:
    """Per-column standardization shared by the distance- and gradient-based learners."""

    def __init__(self, mean: np.ndarray, scale: np.ndarray):
        self.mean = np.asarray(mean, dtype=np.float64)
        self.scale = np.asarray(scale, dtype=np.float64)

    @classmethod
    def fit(cls, x: np.ndarray) -> "Scaler":
        mean = x.mean(axis=0)
        scale = x.std(axis=0)
        scale[scale == 0.0] = 1.0  # constant columns pass through centered
        return cls(mean, scale)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.scale

    def to_json(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_json(cls, raw: dict) -> "Scaler":
        return cls(np.array(raw["mean"]), np.array(raw["scale"]))
