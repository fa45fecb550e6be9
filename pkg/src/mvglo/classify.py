"""Pair-preserving corpus splits, a regularized linear detector and the
balanced-accuracy evaluation protocol."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize


@dataclass(frozen=True)
class PairedCorpus:
    """Cover/stego feature rows paired by sequence id."""
    seq_ids: list[str]
    cover: np.ndarray   # (n, d)
    stego: np.ndarray   # (n, d)

    def __post_init__(self):
        if len(self.seq_ids) != len(self.cover) or self.cover.shape != self.stego.shape:
            raise ValueError("cover/stego rows must pair up one per sequence id")


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    regularization: float
    mean: np.ndarray
    scale: np.ndarray

    def scores(self, features: np.ndarray) -> np.ndarray:
        z = (features - self.mean) / self.scale
        return z @ self.weights + self.bias

    def predict(self, features: np.ndarray) -> np.ndarray:
        return (self.scores(features) > 0).astype(int)


def split(corpus: PairedCorpus, fraction: float, seed: int
          ) -> tuple[np.ndarray, np.ndarray]:
    """Random pair-preserving split; returns index arrays into the corpus.
    A sequence's cover and stego rows always land on the same side."""
    n = len(corpus.seq_ids)
    if n < 2:
        raise ValueError("need at least two cover/stego pairs")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    k = int(round(fraction * n))
    return np.sort(order[:k]), np.sort(order[k:])


def _logloss_grad(wb: np.ndarray, x: np.ndarray, y: np.ndarray, reg: float):
    w, b = wb[:-1], wb[-1]
    z = x @ w + b
    # stable log(1 + exp(-y*z))
    m = -y * z
    loss = np.logaddexp(0.0, m).mean() + 0.5 * reg * w @ w
    s = -y / (1.0 + np.exp(-m))
    grad_w = x.T @ s / len(y) + reg * w
    grad_b = s.mean()
    return loss, np.concatenate([grad_w, [grad_b]])


def train(features: np.ndarray, labels: np.ndarray,
          regularization: float = 1e-3) -> LinearModel:
    """L2-regularized logistic regression on standardized features."""
    labels = np.asarray(labels)
    if len(np.unique(labels)) < 2:
        raise ValueError("training data must contain both classes")
    if not np.all(np.isfinite(features)):
        raise ValueError("non-finite feature values")
    mean = features.mean(axis=0)
    scale = features.std(axis=0)
    scale[scale == 0] = 1.0
    x = (features - mean) / scale
    y = np.where(labels > 0, 1.0, -1.0)
    wb0 = np.zeros(x.shape[1] + 1)
    res = minimize(_logloss_grad, wb0, args=(x, y, regularization),
                   jac=True, method="L-BFGS-B",
                   options={"gtol": 1e-8, "ftol": 0.0, "maxiter": 2000})
    return LinearModel(weights=res.x[:-1], bias=float(res.x[-1]),
                       regularization=regularization, mean=mean, scale=scale)


def evaluate(model: LinearModel, features: np.ndarray, labels: np.ndarray) -> float:
    """Mean of true positive rate and true negative rate at threshold 0."""
    labels = np.asarray(labels)
    pos = labels > 0
    if not pos.any() or pos.all():
        raise ValueError("test set must contain both classes")
    pred = model.predict(features)
    tpr = (pred[pos] == 1).mean()
    tnr = (pred[~pos] == 0).mean()
    return float((tpr + tnr) / 2.0)


def run_experiment(corpus: PairedCorpus, n_splits: int = 20, base_seed: int = 0,
                   regularization: float = 1e-3) -> tuple[float, float]:
    """Average balanced accuracy over random half/half pair splits."""
    accs = []
    for k in range(n_splits):
        tr, te = split(corpus, 0.5, base_seed + k)
        x_tr = np.vstack([corpus.cover[tr], corpus.stego[tr]])
        y_tr = np.concatenate([np.zeros(len(tr)), np.ones(len(tr))])
        x_te = np.vstack([corpus.cover[te], corpus.stego[te]])
        y_te = np.concatenate([np.zeros(len(te)), np.ones(len(te))])
        model = train(x_tr, y_tr, regularization)
        accs.append(evaluate(model, x_te, y_te))
    return float(np.mean(accs)), float(np.std(accs))
