"""k-nearest-neighbors classifier: Euclidean vote over standardized features."""

from __future__ import annotations

import numpy as np

from .base import LabeledDataset, LearnerConfig, Model, Scaler, TrainingError


class KnnModel(Model):
    kind = "kNN"

    def __init__(self, class_list, layout_id, seed, k, scaler, train_x, train_y):
        super().__init__(class_list, layout_id, seed)
        self.k = k
        self.scaler = scaler
        self.train_x = train_x
        self.train_y = train_y
        self._dim = train_x.shape[1]

    def _proba(self, x: np.ndarray) -> np.ndarray:
        z = self.scaler.apply(x)
        # Squared distances via the expansion |a-b|^2 = |a|^2 + |b|^2 - 2ab,
        # which keeps memory at n_query x n_train instead of materializing
        # the difference tensor.
        d2 = (
            (z**2).sum(axis=1)[:, None]
            + (self.train_x**2).sum(axis=1)[None, :]
            - 2.0 * z @ self.train_x.T
        )
        # Stable sort keeps equal distances in training order, so ties
        # resolve toward the lowest row index.
        nearest = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
        out = np.zeros((x.shape[0], len(self.class_list)))
        for row, idx in enumerate(nearest):
            counts = np.bincount(self.train_y[idx], minlength=len(self.class_list))
            out[row] = counts / self.k
        return out

    def _parameters(self) -> dict:
        return {
            "k": self.k,
            "scaler": self.scaler.to_json(),
            "train_x": self.train_x.tolist(),
            "train_y": self.train_y.tolist(),
        }

    @classmethod
    def _restore(cls, class_list, layout_id, seed, parameters):
        return cls(
            class_list,
            layout_id,
            seed,
            int(parameters["k"]),
            Scaler.from_json(parameters["scaler"]),
            np.array(parameters["train_x"], dtype=np.float64),
            np.array(parameters["train_y"], dtype=np.int64),
        )


def fit_knn(cfg: LearnerConfig, data: LabeledDataset) -> KnnModel:
    k = cfg.hyperparameters["k"]
    if k > len(data.labels):
        raise TrainingError(f"k={k} exceeds the {len(data.labels)} training rows")
    scaler = Scaler.fit(data.matrix.values)
    return KnnModel(
        data.class_list,
        data.matrix.layout_id,
        cfg.seed,
        k,
        scaler,
        scaler.apply(data.matrix.values),
        data.y_indices(),
    )
