"""Classification tree: exhaustive Gini-gain splits, Laplace-smoothed leaves."""

from __future__ import annotations

import numpy as np

from .base import LabeledDataset, LearnerConfig, Model


def _gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    frac = counts / n
    return float(1.0 - (frac**2).sum())


def _best_split(x, y, n_classes, feature_ids, min_leaf):
    """Highest-Gini-gain (feature, threshold); ties keep the earliest candidate.

    Candidates are scanned feature-ascending then threshold-ascending, and a
    replacement needs strictly higher gain, so ties break toward the lowest
    feature index and threshold.
    """
    n = x.shape[0]
    parent_counts = np.bincount(y, minlength=n_classes).astype(np.float64)
    parent_gini = _gini(parent_counts)
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0
    best = None
    best_gain = 0.0
    positions = np.arange(1, n, dtype=np.float64)
    for f in feature_ids:
        order = np.argsort(x[:, f], kind="stable")
        xs = x[order, f]
        left = np.cumsum(onehot[order], axis=0)[:-1]
        nl = positions
        nr = n - nl
        valid = (xs[1:] != xs[:-1]) & (nl >= min_leaf) & (nr >= min_leaf)
        if not valid.any():
            continue
        gini_left = 1.0 - ((left / nl[:, None]) ** 2).sum(axis=1)
        gini_right = 1.0 - (((parent_counts - left) / nr[:, None]) ** 2).sum(axis=1)
        gain = np.where(valid, parent_gini - (nl * gini_left + nr * gini_right) / n, -1.0)
        i = int(np.argmax(gain))
        if gain[i] > best_gain + 1e-12:
            best_gain = float(gain[i])
            best = (f, (xs[i] + xs[i + 1]) / 2.0)
    return best


def _grow(x, y, n_classes, depth, hp, rng):
    counts = np.bincount(y, minlength=n_classes)
    n = len(y)
    if (
        depth >= hp["max_depth"]
        or n < hp["min_split"]
        or counts.max() == n
    ):
        return {"leaf": counts}
    if rng is None:
        feature_ids = range(x.shape[1])
    else:
        m = int(np.ceil(np.sqrt(x.shape[1])))
        feature_ids = np.sort(rng.choice(x.shape[1], size=m, replace=False))
    split = _best_split(x, y, n_classes, feature_ids, hp["min_leaf"])
    if split is None:
        return {"leaf": counts}
    f, thr = split
    mask = x[:, f] <= thr
    return {
        "feature": f,
        "threshold": thr,
        "left": _grow(x[mask], y[mask], n_classes, depth + 1, hp, rng),
        "right": _grow(x[~mask], y[~mask], n_classes, depth + 1, hp, rng),
    }


def _flatten(node, nodes):
    idx = len(nodes)
    nodes.append(None)
    if "leaf" in node:
        counts = node["leaf"]
        probs = (counts + 1.0) / (counts.sum() + len(counts))  # Laplace +1
        nodes[idx] = {"probs": probs.tolist(), "n": int(counts.sum())}
    else:
        entry = {"feature": int(node["feature"]), "threshold": float(node["threshold"])}
        nodes[idx] = entry
        entry["left"] = _flatten(node["left"], nodes)
        entry["right"] = _flatten(node["right"], nodes)
    return idx


class TreeModel(Model):
    kind = "Tree"

    def __init__(self, class_list, layout_id, seed, nodes, dim):
        super().__init__(class_list, layout_id, seed)
        self.nodes = nodes
        self._dim = dim

    def _proba(self, x: np.ndarray) -> np.ndarray:
        out = np.empty((x.shape[0], len(self.class_list)))
        for i, row in enumerate(x):
            node = self.nodes[0]
            while "probs" not in node:
                node = self.nodes[node["left"] if row[node["feature"]] <= node["threshold"] else node["right"]]
            out[i] = node["probs"]
        return out

    def _parameters(self) -> dict:
        return {"nodes": self.nodes, "dim": self._dim}

    @classmethod
    def _restore(cls, class_list, layout_id, seed, parameters):
        return cls(class_list, layout_id, seed, parameters["nodes"], int(parameters["dim"]))


def grow_tree(x, y, n_classes, hp, rng=None):
    """Shared by the single tree and the forest; rng enables feature sampling."""
    root = _grow(x, y, n_classes, 0, hp, rng)
    nodes = []
    _flatten(root, nodes)
    return nodes


def fit_tree(cfg: LearnerConfig, data: LabeledDataset) -> TreeModel:
    nodes = grow_tree(data.matrix.values, data.y_indices(), len(data.class_list), cfg.hyperparameters)
    return TreeModel(data.class_list, data.matrix.layout_id, cfg.seed, nodes, data.matrix.dim)
