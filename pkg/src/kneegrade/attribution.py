"""Transparent model audits: permutation importance per feature and family,
and per-prediction occlusion deltas against the training mean."""

from __future__ import annotations

import numpy as np

from .boosting import GbtEnsemble
from .features import family_columns
from .metrics import qwk

FAMILIES = ("jsn", "osp", "scl")


def permutation_importance(model: GbtEnsemble, X: np.ndarray, y: np.ndarray,
                           metric_fn=None, repeats: int = 10, seed: int = 0):
    """Mean metric drop when a feature's (or family's) column block is
    permuted across rows; seeded and deterministic.

    X is raw (un-normalized); the model's embedded normalizer applies.
    Returns {"baseline", "per_feature", "per_family"}.
    """
    if metric_fn is None:
        metric_fn = lambda yy, yh: qwk(yy, yh, classes=model.params.class_count)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.shape[0] < 2:
        raise ValueError("permutation importance requires at least 2 rows")
    baseline = metric_fn(y, model.predict(X))
    rng = np.random.default_rng(seed)
    perms = [rng.permutation(X.shape[0]) for _ in range(repeats)]

    def drop(cols) -> float:
        scores = []
        for perm in perms:
            Xp = X.copy()
            Xp[:, cols] = X[perm][:, cols]
            scores.append(metric_fn(y, model.predict(Xp)))
        return float(baseline - np.mean(scores))

    names = model.feature_names
    per_feature = {name: drop([j]) for j, name in enumerate(names)}
    per_family = {fam: drop(family_columns(names, fam))
                  for fam in FAMILIES if len(family_columns(names, fam))}
    return {"baseline": float(baseline),
            "per_feature": per_feature,
            "per_family": per_family}


def occlusion_attribution(model: GbtEnsemble, x: np.ndarray) -> dict[str, float]:
    """Signed per-feature deltas of the predicted-class probability when the
    feature is moved to its training mean (0 in z-space)."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    proba = model.predict_proba(x)[0]
    cls = int(proba.argmax())
    if model.normalizer is not None:
        means = model.normalizer.mean
    else:
        means = np.zeros(x.shape[1])
    deltas = {}
    for j, name in enumerate(model.feature_names):
        x_occ = x.copy()
        x_occ[0, j] = means[j]
        deltas[name] = float(proba[cls] - model.predict_proba(x_occ)[0, cls])
    return deltas
