"""Single-hidden-layer network: ReLU units, softmax output, Adam training.

The loss/gradient pair is exposed as a pure function so tests can check the
analytic gradients against central finite differences.
"""

from __future__ import annotations

import numpy as np

from .base import LabeledDataset, LearnerConfig, Model, Scaler
from .logistic import softmax


def init_params(n_in: int, n_hidden: int, n_out: int, rng) -> dict:
    """Uniform init scaled by 1/sqrt(fan-in); biases start at zero."""
    lim1 = 1.0 / np.sqrt(n_in)
    lim2 = 1.0 / np.sqrt(n_hidden)
    return {
        "w1": rng.uniform(-lim1, lim1, size=(n_in, n_hidden)),
        "b1": np.zeros(n_hidden),
        "w2": rng.uniform(-lim2, lim2, size=(n_hidden, n_out)),
        "b2": np.zeros(n_out),
    }


def forward(params: dict, x: np.ndarray) -> np.ndarray:
    hidden = np.maximum(0.0, x @ params["w1"] + params["b1"])
    return softmax(hidden @ params["w2"] + params["b2"])


def loss_and_grads(params: dict, x: np.ndarray, onehot: np.ndarray, l2: float):
    """Mean cross-entropy plus L2 on the weight matrices (biases excluded)."""
    n = x.shape[0]
    pre1 = x @ params["w1"] + params["b1"]
    hidden = np.maximum(0.0, pre1)
    probs = softmax(hidden @ params["w2"] + params["b2"])
    ce = -np.log(np.clip((probs * onehot).sum(axis=1), 1e-300, None)).mean()
    loss = ce + 0.5 * l2 * (float((params["w1"] ** 2).sum()) + float((params["w2"] ** 2).sum()))

    delta2 = (probs - onehot) / n
    grads = {
        "w2": hidden.T @ delta2 + l2 * params["w2"],
        "b2": delta2.sum(axis=0),
    }
    delta1 = (delta2 @ params["w2"].T) * (pre1 > 0.0)
    grads["w1"] = x.T @ delta1 + l2 * params["w1"]
    grads["b1"] = delta1.sum(axis=0)
    return loss, grads


class MlpModel(Model):
    kind = "NeuralNetwork"

    def __init__(self, class_list, layout_id, seed, scaler, params):
        super().__init__(class_list, layout_id, seed)
        self.scaler = scaler
        self.params = params
        self._dim = params["w1"].shape[0]

    def _proba(self, x: np.ndarray) -> np.ndarray:
        return forward(self.params, self.scaler.apply(x))

    def _parameters(self) -> dict:
        return {"scaler": self.scaler.to_json(), **{k: v.tolist() for k, v in self.params.items()}}

    @classmethod
    def _restore(cls, class_list, layout_id, seed, parameters):
        params = {k: np.array(parameters[k], dtype=np.float64) for k in ("w1", "b1", "w2", "b2")}
        return cls(class_list, layout_id, seed, Scaler.from_json(parameters["scaler"]), params)


def fit_mlp(cfg: LearnerConfig, data: LabeledDataset) -> MlpModel:
    hp = cfg.hyperparameters
    scaler = Scaler.fit(data.matrix.values)
    x = scaler.apply(data.matrix.values)
    y = data.y_indices()
    n, n_out = len(y), len(data.class_list)
    onehot = np.zeros((n, n_out))
    onehot[np.arange(n), y] = 1.0

    rng = np.random.default_rng(cfg.seed)
    params = init_params(x.shape[1], hp["hidden"], n_out, rng)
    moments = {k: (np.zeros_like(v), np.zeros_like(v)) for k, v in params.items()}
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0
    for _ in range(hp["epochs"]):
        order = rng.permutation(n)
        for start in range(0, n, hp["batch_size"]):
            batch = order[start : start + hp["batch_size"]]
            _, grads = loss_and_grads(params, x[batch], onehot[batch], hp["l2"])
            step += 1
            for key, grad in grads.items():
                m, v = moments[key]
                m *= beta1
                m += (1 - beta1) * grad
                v *= beta2
                v += (1 - beta2) * grad**2
                m_hat = m / (1 - beta1**step)
                v_hat = v / (1 - beta2**step)
                params[key] -= hp["learning_rate"] * m_hat / (np.sqrt(v_hat) + eps)
    return MlpModel(data.class_list, data.matrix.layout_id, cfg.seed, scaler, params)
