"""Binary sclerosis head: L2-regularized logistic regression fit by
deterministic Newton iterations, with a validation-set threshold sweep
maximizing macro F1."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metrics import macro_f1


@dataclass
class SclerosisHead:
    weights: np.ndarray  # 18 coefficients + bias appended
    threshold: float

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        z = X @ self.weights[:-1] + self.weights[-1]
        return 1.0 / (1.0 + np.exp(-z))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_proba(X) >= self.threshold).astype(int)


def fit_logistic(X: np.ndarray, y: np.ndarray, l2: float = 1.0,
                 max_iter: int = 500, tol: float = 1e-8) -> np.ndarray:
    """Full-batch Newton fit of logistic regression; bias unregularized."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(np.unique(y)) < 2:
        raise ValueError("single-class training labels")
    n, d = X.shape
    Xb = np.hstack([X, np.ones((n, 1))])
    w = np.zeros(d + 1)
    reg = np.full(d + 1, l2)
    reg[-1] = 0.0
    for _ in range(max_iter):
        p = 1.0 / (1.0 + np.exp(-(Xb @ w)))
        grad = Xb.T @ (p - y) + reg * w
        s = np.clip(p * (1 - p), 1e-12, None)
        hess = (Xb * s[:, None]).T @ Xb + np.diag(reg)
        step = np.linalg.solve(hess, grad)
        w = w - step
        if np.max(np.abs(step)) < tol:
            break
    return w


def sweep_threshold(probs_val: np.ndarray, y_val: np.ndarray) -> float:
    """Smallest midpoint of sorted unique validation probabilities that
    maximizes validation macro F1; 0.5 when no midpoints exist."""
    uniq = np.unique(probs_val)
    if uniq.size < 2:
        return 0.5
    candidates = (uniq[:-1] + uniq[1:]) / 2.0
    best_tau, best_f1 = 0.5, -1.0
    for tau in candidates:
        f1 = macro_f1(y_val, (probs_val >= tau).astype(int), classes=2)
        if f1 > best_f1 + 1e-15:
            best_tau, best_f1 = float(tau), f1
    return best_tau


def sclerosis_fit_and_sweep(X: np.ndarray, y: np.ndarray, splits,
                            l2: float = 1.0) -> SclerosisHead:
    """Fit the head on the train rows and sweep the threshold on val rows."""
    splits = np.asarray(splits)
    train = splits == "train"
    val = splits == "val"
    if not train.any() or not val.any():
        raise ValueError("train and val rows are both required")
    w = fit_logistic(np.asarray(X)[train], np.asarray(y)[train], l2=l2)
    head = SclerosisHead(weights=w, threshold=0.5)
    head.threshold = sweep_threshold(head.predict_proba(np.asarray(X)[val]),
                                     np.asarray(y)[val])
    return head
