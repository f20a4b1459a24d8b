"""L2-regularized logistic regression and the classification scorecard."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import expit, log_expit
from scipy.stats import rankdata

PROB_CLAMP = 1e-12


class SingleClassError(ValueError):
    """Training labels contain only one class."""


@dataclass(frozen=True, eq=False)
class LogisticModel:
    weights: np.ndarray
    bias: float
    training_meta: dict = field(default_factory=dict)


def loss_and_grad(w, b, X, y, l2):
    """Mean negative log-likelihood plus ``l2/2 |w|^2`` and its gradient.

    Returns ``(loss, grad_w, grad_b)``; the bias is not penalized.
    """
    z = X @ w + b
    loss = -np.mean(y * log_expit(z) + (1 - y) * log_expit(-z)) + 0.5 * l2 * (w @ w)
    r = expit(z) - y
    gw = X.T @ r / X.shape[0] + l2 * w
    gb = r.mean()
    return float(loss), gw, float(gb)


def train_logistic(X, y, l2: float = 1e-4, max_iter: int = 500, tol: float = 1e-8) -> LogisticModel:
    """Batch gradient descent from zero with Armijo backtracking.

    Stops when the gradient norm drops below ``tol`` or after ``max_iter``
    accepted steps.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite values")
    if np.unique(y).size < 2:
        raise SingleClassError("training labels contain a single class")
    w = np.zeros(X.shape[1])
    b = 0.0
    loss, gw, gb = loss_and_grad(w, b, X, y, l2)
    step = 1.0
    losses = [loss]
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        gnorm2 = gw @ gw + gb * gb
        if np.sqrt(gnorm2) < tol:
            converged = True
            break
        while True:
            w_new, b_new = w - step * gw, b - step * gb
            new_loss, ngw, ngb = loss_and_grad(w_new, b_new, X, y, l2)
            if new_loss <= loss - 0.5 * step * gnorm2 or step < 1e-12:
                break
            step *= 0.5
        if new_loss > loss:
            # line search exhausted without descent
            break
        w, b, loss, gw, gb = w_new, b_new, new_loss, ngw, ngb
        losses.append(loss)
        step = min(step * 2.0, 1e3)
    meta = {"iterations": it, "final_loss": loss, "converged": converged, "losses": losses}
    return LogisticModel(w, float(b), meta)


def predict_proba(model: LogisticModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.weights.shape[0]:
        raise ValueError(f"model expects {model.weights.shape[0]} columns, got {X.shape[1]}")
    return np.clip(expit(X @ model.weights + model.bias), PROB_CLAMP, 1 - PROB_CLAMP)


def classify(probs, threshold: float) -> np.ndarray:
    if not 0 < threshold < 1:
        raise ValueError(f"threshold must lie in (0,1), got {threshold}")
    return (np.asarray(probs) >= threshold).astype(np.int64)


def auc_score(y_true, scores) -> Optional[float]:
    """Mann-Whitney AUC with midranks for ties; None for single-class labels."""
    y = np.asarray(y_true).astype(bool)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(scores, method="average")
    return float((ranks[y].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


@dataclass(frozen=True)
class ClassificationReport:
    accuracy: float
    auc: Optional[float]
    f1: float
    precision: float
    tpr: float
    tnr: float
    fpr: float
    fnr: float
    threshold: float
    tp: int
    tn: int
    fp: int
    fn: int

    def as_metrics(self) -> dict:
        out = {
            "accuracy": self.accuracy, "auc": self.auc, "f1": self.f1, "tpr": self.tpr,
            "tnr": self.tnr, "fpr": self.fpr, "fnr": self.fnr, "threshold": self.threshold,
        }
        return {k: v for k, v in out.items() if v is not None}


def _rate(num, den):
    return num / den if den > 0 else 0.0


def score(y_true, y_pred, probs, threshold: float = float("nan")) -> ClassificationReport:
    y_true = np.asarray(y_true).astype(np.int64)
    y_pred = np.asarray(y_pred).astype(np.int64)
    probs = np.asarray(probs, dtype=np.float64)
    if not (y_true.shape == y_pred.shape == probs.shape):
        raise ValueError("y_true, y_pred and probs must have equal length")
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    tn = int(np.sum((y_true == 0) & (y_pred == 0)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    precision = tp / max(tp + fp, 1)
    recall = _rate(tp, tp + fn)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return ClassificationReport(
        accuracy=(tp + tn) / y_true.size,
        auc=auc_score(y_true, probs),
        f1=f1,
        precision=precision,
        tpr=recall,
        tnr=_rate(tn, tn + fp),
        fpr=_rate(fp, fp + tn),
        fnr=_rate(fn, fn + tp),
        threshold=float(threshold),
        tp=tp, tn=tn, fp=fp, fn=fn,
    )


def evaluate(X_train, y_train, X_test, y_test, l2: float = 1e-4) -> ClassificationReport:
    """Fit on the training rows, threshold test probabilities at the training
    class prior, and score."""
    model = train_logistic(X_train, y_train, l2=l2)
    probs = predict_proba(model, X_test)
    threshold = float(np.mean(y_train))
    return score(y_test, classify(probs, threshold), probs, threshold)
