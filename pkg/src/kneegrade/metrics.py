"""Segmentation, agreement and classification metrics plus the percentile
bootstrap used throughout the evaluation protocols."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree


@dataclass
class MetricReport:
    metrics: dict[str, float]
    n: int
    protocol: str = ""
    seed: int | None = None
    per_class: dict[str, list[float]] = field(default_factory=dict)
    ci: dict[str, tuple[float, float]] = field(default_factory=dict)
    notes: dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "metrics": {k: float(v) for k, v in self.metrics.items()},
            "n": self.n,
            "protocol": self.protocol,
            "seed": self.seed,
            "per_class": {k: [float(x) for x in v] for k, v in self.per_class.items()},
            "ci": {k: [float(v[0]), float(v[1])] for k, v in self.ci.items()},
            "notes": self.notes,
        }


# ---------------------------------------------------------------------------
# segmentation

def dice(mask_a: np.ndarray, mask_b: np.ndarray, label: int) -> float:
    """2|A∩B| / (|A|+|B|) over pixels equal to `label`; 1.0 when both empty."""
    a = np.asarray(mask_a) == label
    b = np.asarray(mask_b) == label
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    denom = a.sum() + b.sum()
    if denom == 0:
        return 1.0
    return float(2.0 * np.logical_and(a, b).sum() / denom)


def boundary_pixels(region: np.ndarray) -> np.ndarray:
    """Coordinates of region pixels with at least one 8-neighbor outside the
    region (image border counts as outside)."""
    region = np.asarray(region, dtype=bool)
    padded = np.pad(region, 1, constant_values=False)
    interior = np.ones_like(region)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            interior &= padded[1 + dy:1 + dy + region.shape[0],
                               1 + dx:1 + dx + region.shape[1]]
    return np.argwhere(region & ~interior)


def hd95(mask_a: np.ndarray, mask_b: np.ndarray, label: int) -> float:
    """95th percentile of the pooled directed boundary distances A->B, B->A."""
    a = np.asarray(mask_a) == label
    b = np.asarray(mask_b) == label
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    pa = boundary_pixels(a)
    pb = boundary_pixels(b)
    if pa.size == 0 or pb.size == 0:
        raise ValueError(f"label {label} empty in one of the masks")
    d_ab = cKDTree(pb).query(pa)[0]
    d_ba = cKDTree(pa).query(pb)[0]
    return float(np.percentile(np.concatenate([d_ab, d_ba]), 95))


# ---------------------------------------------------------------------------
# agreement

def icc(rater1, rater2) -> float:
    """ICC(2,1): two-way random effects, absolute agreement, single
    measurement, for two raters."""
    x = np.asarray(rater1, dtype=float)
    y = np.asarray(rater2, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("expected two equal-length 1-d rating vectors")
    n = x.size
    if n < 3:
        raise ValueError("ICC requires at least 3 subjects")
    data = np.stack([x, y], axis=1)  # n subjects x k=2 raters
    k = 2
    grand = data.mean()
    if np.allclose(data, grand):
        return 1.0 if np.allclose(x, y) else 0.0
    row_means = data.mean(axis=1)
    col_means = data.mean(axis=0)
    ss_total = ((data - grand) ** 2).sum()
    ss_rows = k * ((row_means - grand) ** 2).sum()
    ss_cols = n * ((col_means - grand) ** 2).sum()
    ss_err = ss_total - ss_rows - ss_cols
    ms_r = ss_rows / (n - 1)
    ms_c = ss_cols / (k - 1)
    ms_e = ss_err / ((n - 1) * (k - 1))
    denom = ms_r + (k - 1) * ms_e + k * (ms_c - ms_e) / n
    if denom == 0:
        return 1.0 if np.allclose(x, y) else 0.0
    return float((ms_r - ms_e) / denom)


def confusion_matrix(y: np.ndarray, y_hat: np.ndarray, classes: int) -> np.ndarray:
    mat = np.zeros((classes, classes))
    np.add.at(mat, (np.asarray(y, dtype=int), np.asarray(y_hat, dtype=int)), 1.0)
    return mat


def qwk(y, y_hat, classes: int = 5) -> float:
    """Quadratic weighted kappa with squared-distance penalties."""
    y = np.asarray(y, dtype=int)
    y_hat = np.asarray(y_hat, dtype=int)
    if y.shape != y_hat.shape:
        raise ValueError("length mismatch")
    obs = confusion_matrix(y, y_hat, classes)
    n = obs.sum()
    expected = np.outer(obs.sum(axis=1), obs.sum(axis=0)) / n
    i = np.arange(classes, dtype=float)
    w = (i[:, None] - i[None, :]) ** 2 / (classes - 1) ** 2
    denom = (w * expected).sum()
    if denom == 0:
        return 1.0 if np.trace(obs) == n else 0.0
    return float(1.0 - (w * obs).sum() / denom)


# ---------------------------------------------------------------------------
# classification

def _per_class_f1(y, y_hat, classes: int) -> np.ndarray:
    obs = confusion_matrix(y, y_hat, classes)
    tp = np.diag(obs)
    fp = obs.sum(axis=0) - tp
    fn = obs.sum(axis=1) - tp
    denom = 2 * tp + fp + fn
    with np.errstate(invalid="ignore", divide="ignore"):
        f1 = np.where(denom > 0, 2 * tp / np.maximum(denom, 1e-300), 0.0)
    return f1


def macro_f1(y, y_hat, classes: int = 5) -> float:
    """Unweighted mean of per-class F1; classes absent from both y and y_hat
    contribute F1 = 0 and are counted."""
    return float(_per_class_f1(np.asarray(y), np.asarray(y_hat), classes).mean())


def balanced_accuracy(y, y_hat, classes: int = 5) -> float:
    """Mean per-class recall over classes present in y."""
    obs = confusion_matrix(np.asarray(y), np.asarray(y_hat), classes)
    support = obs.sum(axis=1)
    present = support > 0
    recall = np.diag(obs)[present] / support[present]
    return float(recall.mean())


def _binary_auc(y_bin: np.ndarray, score: np.ndarray) -> float:
    """Rank-based AUC with midrank tie handling (Mann-Whitney)."""
    order = np.argsort(score, kind="stable")
    ranks = np.empty(len(score), dtype=float)
    sorted_scores = score[order]
    ranks[order] = np.arange(1, len(score) + 1, dtype=float)
    # assign midranks to ties
    i = 0
    while i < len(score):
        j = i
        while j + 1 < len(score) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        if j > i:
            ranks[order[i:j + 1]] = (i + 1 + j + 1) / 2.0
        i = j + 1
    n_pos = int(y_bin.sum())
    n_neg = len(y_bin) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC undefined for a single-class label vector")
    return float((ranks[y_bin == 1].sum() - n_pos * (n_pos + 1) / 2.0)
                 / (n_pos * n_neg))


def macro_auc(y, probs) -> float:
    """One-vs-rest AUC averaged over classes present in y."""
    y = np.asarray(y, dtype=int)
    probs = np.asarray(probs, dtype=float)
    aucs = []
    for cls in np.unique(y):
        y_bin = (y == cls).astype(int)
        if 0 < y_bin.sum() < len(y_bin):
            aucs.append(_binary_auc(y_bin, probs[:, cls]))
    if not aucs:
        raise ValueError("AUC undefined: no two-class split available")
    return float(np.mean(aucs))


def classification_metrics(y, y_hat=None, probs=None, classes: int = 5) -> dict[str, float]:
    """accuracy, macro F1, balanced accuracy and macro AUC in one report.

    `y_hat` defaults to the argmax of `probs`; AUC is omitted when no
    probabilities are supplied.
    """
    y = np.asarray(y, dtype=int)
    if y_hat is None:
        if probs is None:
            raise ValueError("either y_hat or probs is required")
        y_hat = np.asarray(probs).argmax(axis=1)
    y_hat = np.asarray(y_hat, dtype=int)
    if y.shape != y_hat.shape:
        raise ValueError("length mismatch")
    out = {
        "accuracy": float((y == y_hat).mean()),
        "macro_f1": macro_f1(y, y_hat, classes),
        "balanced_accuracy": balanced_accuracy(y, y_hat, classes),
    }
    if probs is not None:
        out["macro_auc"] = macro_auc(y, probs)
    return out


# ---------------------------------------------------------------------------
# bootstrap

def bootstrap_ci(metric_fn, y, y_hat_or_probs, b: int = 1000,
                 level: float = 0.95, seed: int = 0):
    """Seeded percentile bootstrap interval for metric_fn(y, pred).

    Resamples where the metric is undefined (raises ValueError or returns a
    non-finite value) are skipped and counted; the count is returned as the
    third element.
    """
    y = np.asarray(y)
    pred = np.asarray(y_hat_or_probs)
    n = len(y)
    if n < 2:
        raise ValueError("bootstrap requires n >= 2")
    rng = np.random.default_rng(seed)
    values = []
    skipped = 0
    for _ in range(b):
        idx = rng.integers(0, n, size=n)
        try:
            v = metric_fn(y[idx], pred[idx])
        except (ValueError, ZeroDivisionError):
            skipped += 1
            continue
        if not np.isfinite(v):
            skipped += 1
            continue
        values.append(v)
    if not values:
        raise ValueError("metric undefined in every bootstrap resample")
    alpha = (1.0 - level) / 2.0
    lo, hi = np.percentile(values, [100 * alpha, 100 * (1 - alpha)])
    return float(lo), float(hi), skipped
