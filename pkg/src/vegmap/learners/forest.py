"""Random forest: bagged Gini trees with per-split feature sampling."""

from __future__ import annotations

import numpy as np

from .base import LabeledDataset, LearnerConfig, Model
from .tree import TreeModel, grow_tree


class ForestModel(Model):
    kind = "RandomForest"

    def __init__(self, class_list, layout_id, seed, trees, dim):
        super().__init__(class_list, layout_id, seed)
        self.trees = trees
        self._dim = dim

    def _proba(self, x: np.ndarray) -> np.ndarray:
        acc = np.zeros((x.shape[0], len(self.class_list)))
        for tree in self.trees:
            acc += tree._proba(x)
        return acc / len(self.trees)

    def _parameters(self) -> dict:
        return {"trees": [t.nodes for t in self.trees], "dim": self._dim}

    @classmethod
    def _restore(cls, class_list, layout_id, seed, parameters):
        dim = int(parameters["dim"])
        trees = [TreeModel(class_list, layout_id, seed, nodes, dim) for nodes in parameters["trees"]]
        return cls(class_list, layout_id, seed, trees, dim)


def fit_forest(cfg: LearnerConfig, data: LabeledDataset) -> ForestModel:
    hp = cfg.hyperparameters
    x = data.matrix.values
    y = data.y_indices()
    n = len(y)
    tree_params = {k: hp[k] for k in ("max_depth", "min_split", "min_leaf")}
    seeds = np.random.SeedSequence(cfg.seed).spawn(hp["n_trees"])
    trees = []
    for seq in seeds:
        rng = np.random.default_rng(seq)
        if hp["bootstrap"]:
            sample = rng.integers(0, n, size=n)
            xs, ys = x[sample], y[sample]
        else:
            xs, ys = x, y
        split_rng = rng if hp["max_features"] == "sqrt" else None
        nodes = grow_tree(xs, ys, len(data.class_list), tree_params, split_rng)
        trees.append(TreeModel(data.class_list, data.matrix.layout_id, cfg.seed, nodes, data.matrix.dim))
    return ForestModel(data.class_list, data.matrix.layout_id, cfg.seed, trees, data.matrix.dim)
