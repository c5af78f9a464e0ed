"""One-vs-rest RBF support vector machine with Platt-calibrated probabilities.

Each binary problem is solved by a sequential minimal optimization loop over
the dual; probabilities come from a per-class sigmoid fitted on decision
values of an internal 80/20 split, then normalized across classes.
"""

from __future__ import annotations

import math

import numpy as np

from .base import LabeledDataset, LearnerConfig, Model, Scaler


def _rbf(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    sq = (a**2).sum(axis=1)[:, None] + (b**2).sum(axis=1)[None, :] - 2.0 * a @ b.T
    np.clip(sq, 0.0, None, out=sq)
    return np.exp(-gamma * sq)


def _smo(K: np.ndarray, y: np.ndarray, C: float, tol: float, max_passes: int, rng) -> tuple[np.ndarray, float]:
    """Simplified SMO over a precomputed kernel; returns (alpha, bias)."""
    n = len(y)
    alpha = np.zeros(n)
    b = 0.0
    # Margin cache f = K @ (alpha * y), updated in place after each pair
    # change so error lookups stay O(1) instead of O(n).
    f = np.zeros(n)
    passes = 0
    budget = max(200 * n, 20000)  # hard stop against degenerate cycling
    while passes < max_passes and budget > 0:
        changed = 0
        for i in range(n):
            budget -= 1
            e_i = float(f[i]) + b - y[i]
            if not ((y[i] * e_i < -tol and alpha[i] < C) or (y[i] * e_i > tol and alpha[i] > 0)):
                continue
            j = int(rng.integers(0, n - 1))
            if j >= i:
                j += 1
            e_j = float(f[j]) + b - y[j]
            ai_old, aj_old = alpha[i], alpha[j]
            if y[i] != y[j]:
                low, high = max(0.0, aj_old - ai_old), min(C, C + aj_old - ai_old)
            else:
                low, high = max(0.0, ai_old + aj_old - C), min(C, ai_old + aj_old)
            if low == high:
                continue
            eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
            if eta >= 0.0:
                continue
            aj = min(high, max(low, aj_old - y[j] * (e_i - e_j) / eta))
            if abs(aj - aj_old) < 1e-5:
                continue
            ai = ai_old + y[i] * y[j] * (aj_old - aj)
            alpha[i], alpha[j] = ai, aj
            f += (ai - ai_old) * y[i] * K[:, i] + (aj - aj_old) * y[j] * K[:, j]
            b1 = b - e_i - y[i] * (ai - ai_old) * K[i, i] - y[j] * (aj - aj_old) * K[i, j]
            b2 = b - e_j - y[i] * (ai - ai_old) * K[i, j] - y[j] * (aj - aj_old) * K[j, j]
            if 0.0 < ai < C:
                b = b1
            elif 0.0 < aj < C:
                b = b2
            else:
                b = (b1 + b2) / 2.0
            changed += 1
        passes = passes + 1 if changed == 0 else 0
    return alpha, b


def _fit_sigmoid(decision: np.ndarray, positive: np.ndarray) -> tuple[float, float]:
    """Platt scaling via the regularized Newton iteration of Lin et al."""
    prior1 = int(positive.sum())
    prior0 = len(positive) - prior1
    hi = (prior1 + 1.0) / (prior1 + 2.0)
    lo = 1.0 / (prior0 + 2.0)
    t = np.where(positive, hi, lo)
    a, b = 0.0, math.log((prior0 + 1.0) / (prior1 + 1.0))

    def objective(a, b):
        z = a * decision + b
        # stable log(1 + e^z) split by sign
        pos = z >= 0
        val = np.where(pos, z + np.log1p(np.exp(-np.abs(z))), np.log1p(np.exp(z)))
        return float((t * val + (1.0 - t) * np.where(pos, np.log1p(np.exp(-z)), val - z)).sum())

    fval = objective(a, b)
    for _ in range(100):
        z = a * decision + b
        p = np.where(z >= 0, np.exp(-z) / (1.0 + np.exp(-z)), 1.0 / (1.0 + np.exp(z)))
        d1 = t - p
        d2 = p * (1.0 - p)
        g1 = float((decision * d1).sum())
        g2 = float(d1.sum())
        if abs(g1) < 1e-10 and abs(g2) < 1e-10:
            break
        h11 = float((decision**2 * d2).sum()) + 1e-12
        h22 = float(d2.sum()) + 1e-12
        h12 = float((decision * d2).sum())
        det = h11 * h22 - h12 * h12
        da = -(h22 * g1 - h12 * g2) / det
        db = -(-h12 * g1 + h11 * g2) / det
        step = 1.0
        grad_dot = g1 * da + g2 * db
        while step >= 1e-10:
            na, nb = a + step * da, b + step * db
            nval = objective(na, nb)
            if nval < fval + 1e-4 * step * grad_dot:
                a, b, fval = na, nb, nval
                break
            step /= 2.0
        else:
            break
    return a, b


def _calibration_split(positive: np.ndarray, rng) -> tuple[np.ndarray, np.ndarray]:
    """Stratified 80/20 row split; each side keeps >= 1 of a group of >= 2."""
    train, held = [], []
    for flag in (True, False):
        idx = np.flatnonzero(positive == flag)
        if len(idx) == 0:
            continue
        idx = rng.permutation(idx)
        n_held = max(1, int(round(0.2 * len(idx)))) if len(idx) >= 2 else 0
        held.extend(idx[:n_held])
        train.extend(idx[n_held:])
    return np.sort(np.array(train, dtype=np.int64)), np.sort(np.array(held, dtype=np.int64))


class SvmModel(Model):
    kind = "SVM"

    def __init__(self, class_list, layout_id, seed, scaler, gamma, machines):
        super().__init__(class_list, layout_id, seed)
        self.scaler = scaler
        self.gamma = gamma
        self.machines = machines  # per class: dict(sv_x, coef, b, a, b_platt)
        self._dim = len(scaler.mean)

    def _decision(self, z: np.ndarray, machine: dict) -> np.ndarray:
        if len(machine["coef"]) == 0:
            return np.zeros(z.shape[0])
        return _rbf(z, machine["sv_x"], self.gamma) @ machine["coef"] + machine["b"]

    def _proba(self, x: np.ndarray) -> np.ndarray:
        z = self.scaler.apply(x)
        raw = np.empty((z.shape[0], len(self.class_list)))
        for c, machine in enumerate(self.machines):
            f = self._decision(z, machine)
            arg = np.clip(machine["a"] * f + machine["b_platt"], -500, 500)
            raw[:, c] = 1.0 / (1.0 + np.exp(arg))
        totals = raw.sum(axis=1, keepdims=True)
        flat = totals[:, 0] <= 0.0
        raw[flat] = 1.0 / len(self.class_list)
        totals[flat] = 1.0
        return raw / totals

    def _parameters(self) -> dict:
        return {
            "scaler": self.scaler.to_json(),
            "gamma": self.gamma,
            "machines": [
                {
                    "sv_x": m["sv_x"].tolist(),
                    "coef": m["coef"].tolist(),
                    "b": m["b"],
                    "a": m["a"],
                    "b_platt": m["b_platt"],
                }
                for m in self.machines
            ],
        }

    @classmethod
    def _restore(cls, class_list, layout_id, seed, parameters):
        scaler = Scaler.from_json(parameters["scaler"])
        dim = len(scaler.mean)
        machines = [
            {
                "sv_x": np.array(m["sv_x"], dtype=np.float64).reshape(len(m["coef"]), dim),
                "coef": np.array(m["coef"], dtype=np.float64),
                "b": float(m["b"]),
                "a": float(m["a"]),
                "b_platt": float(m["b_platt"]),
            }
            for m in parameters["machines"]
        ]
        return cls(class_list, layout_id, seed, scaler, float(parameters["gamma"]), machines)


def _train_binary(z, positive, K, hp, gamma, rng):
    y = np.where(positive, 1.0, -1.0)
    if positive.all() or not positive.any():
        # one-sided problem: constant decision 0, probability pinned near 0/1
        return {"sv_x": z[:0], "coef": np.zeros(0), "b": 0.0,
                "a": 0.0, "b_platt": -500.0 if positive.all() else 500.0}

    train, held = _calibration_split(positive, rng)
    if len(held) and positive[held].any() and (~positive[held]).any() and len(train) >= 2 and positive[train].any() and (~positive[train]).any():
        sub_alpha, sub_b = _smo(K[np.ix_(train, train)], y[train], hp["C"], hp["tol"], hp["max_passes"], rng)
        keep = sub_alpha > 1e-12
        if keep.any():
            deci = _rbf(z[held], z[train][keep], gamma) @ (sub_alpha[keep] * y[train][keep]) + sub_b
        else:
            deci = np.full(len(held), sub_b)
        a, b_platt = _fit_sigmoid(deci, positive[held])
    else:
        a, b_platt = None, None  # calibrate on full-data decisions below

    alpha, b = _smo(K, y, hp["C"], hp["tol"], hp["max_passes"], rng)
    keep = alpha > 1e-12
    if a is None:
        deci = K @ (alpha * y) + b
        a, b_platt = _fit_sigmoid(deci, positive)
    return {"sv_x": z[keep].copy(), "coef": alpha[keep] * y[keep], "b": b, "a": a, "b_platt": b_platt}


def fit_svm(cfg: LearnerConfig, data: LabeledDataset) -> SvmModel:
    hp = cfg.hyperparameters
    scaler = Scaler.fit(data.matrix.values)
    z = scaler.apply(data.matrix.values)
    gamma = 1.0 / z.shape[1] if hp["gamma"] == "auto" else float(hp["gamma"])
    K = _rbf(z, z, gamma)
    y = data.y_indices()
    machines = []
    for c in range(len(data.class_list)):
        rng = np.random.default_rng([cfg.seed, c])
        machines.append(_train_binary(z, y == c, K, hp, gamma, rng))
    return SvmModel(data.class_list, data.matrix.layout_id, cfg.seed, scaler, gamma, machines)
