"""Multinomial logistic regression trained by backtracking gradient descent."""

from __future__ import annotations

import warnings

import numpy as np

from .base import LabeledDataset, LearnerConfig, Model, Scaler


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _loss_and_grad(w, x, y_onehot, l2):
    n = x.shape[0]
    p = softmax(x @ w)
    ce = -np.log(np.clip(p[np.arange(n), y_onehot.argmax(axis=1)], 1e-300, None)).mean()
    penalty = 0.5 * l2 / n * float((w[1:] ** 2).sum())  # bias row unpenalized
    grad = x.T @ (p - y_onehot) / n
    grad[1:] += l2 / n * w[1:]
    return ce + penalty, grad


class LogisticModel(Model):
    kind = "LogisticRegression"

    def __init__(self, class_list, layout_id, seed, scaler, weights, n_iter=0, grad_norm=0.0):
        super().__init__(class_list, layout_id, seed)
        self.scaler = scaler
        self.weights = weights
        self.n_iter = n_iter
        self.grad_norm = grad_norm
        self._dim = weights.shape[0] - 1

    def _proba(self, x: np.ndarray) -> np.ndarray:
        z = self.scaler.apply(x)
        xb = np.hstack([np.ones((z.shape[0], 1)), z])
        return softmax(xb @ self.weights)

    def _parameters(self) -> dict:
        return {
            "scaler": self.scaler.to_json(),
            "weights": self.weights.tolist(),
            "n_iter": self.n_iter,
            "grad_norm": self.grad_norm,
        }

    @classmethod
    def _restore(cls, class_list, layout_id, seed, parameters):
        return cls(
            class_list,
            layout_id,
            seed,
            Scaler.from_json(parameters["scaler"]),
            np.array(parameters["weights"], dtype=np.float64),
            int(parameters.get("n_iter", 0)),
            float(parameters.get("grad_norm", 0.0)),
        )


def fit_logistic(cfg: LearnerConfig, data: LabeledDataset) -> LogisticModel:
    hp = cfg.hyperparameters
    scaler = Scaler.fit(data.matrix.values)
    z = scaler.apply(data.matrix.values)
    xb = np.hstack([np.ones((z.shape[0], 1)), z])
    y = data.y_indices()
    onehot = np.zeros((len(y), len(data.class_list)))
    onehot[np.arange(len(y)), y] = 1.0

    w = np.zeros((xb.shape[1], len(data.class_list)))
    loss, grad = _loss_and_grad(w, xb, onehot, hp["l2"])
    step = 1.0
    n_iter = 0
    for n_iter in range(1, hp["max_iter"] + 1):
        gnorm2 = float((grad**2).sum())
        if np.sqrt(gnorm2) < hp["tol"]:
            n_iter -= 1
            break
        # Armijo backtracking keeps the loss non-increasing.
        step = min(step * 2.0, 1e6)
        while True:
            cand = w - step * grad
            cand_loss, cand_grad = _loss_and_grad(cand, xb, onehot, hp["l2"])
            if cand_loss <= loss - 1e-4 * step * gnorm2 or step < 1e-20:
                break
            step *= 0.5
        if cand_loss > loss:
            break
        w, loss, grad = cand, cand_loss, cand_grad

    grad_norm = float(np.linalg.norm(grad))
    if grad_norm >= hp["tol"]:
        warnings.warn(
            f"logistic regression stopped after {n_iter} iterations with "
            f"gradient norm {grad_norm:.3e} (tolerance {hp['tol']:.0e})",
            stacklevel=2,
        )
    return LogisticModel(data.class_list, data.matrix.layout_id, cfg.seed, scaler, w, n_iter, grad_norm)
