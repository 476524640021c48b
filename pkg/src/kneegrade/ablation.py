"""Feature-family retraining ablation and inference-time intervention
ablation for the transparent grading path."""

from __future__ import annotations

import numpy as np

from .boosting import GbtEnsemble, GbtParams, gbt_train
from .features import Normalizer, family_columns, intervene
from .metrics import classification_metrics, macro_auc, qwk

# (config name, families, expected dims) in report order
FAMILY_CONFIGS = (
    ("JSN only", ("jsn",), 22),
    ("Osteophyte only", ("osp",), 10),
    ("Sclerosis only", ("scl",), 18),
    ("Osteophyte + Sclerosis", ("osp", "scl"), 28),
    ("JSN + Osteophyte", ("jsn", "osp"), 32),
    ("JSN + Osteophyte + Sclerosis (full)", ("jsn", "osp", "scl"), 50),
)


def _config_columns(feature_names, families):
    cols = np.concatenate([family_columns(feature_names, f) for f in families])
    return np.sort(cols)


def ablation_family(X: np.ndarray, y: np.ndarray, splits, feature_names,
                    params: GbtParams | None = None,
                    configs=FAMILY_CONFIGS) -> list[dict]:
    """Retrain on each family-restricted column set (train split) and score
    the held-out test split. Returns one row dict per configuration."""
    params = params or GbtParams()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    splits = np.asarray(splits)
    train = splits == "train"
    test = splits == "test"
    rows = []
    for name, families, dims in configs:
        cols = _config_columns(feature_names, families)
        if cols.size != dims:
            raise ValueError(f"config {name!r}: expected {dims} columns, got {cols.size}")
        sub_names = [feature_names[c] for c in cols]
        norm = Normalizer().fit(X[train][:, cols])
        model = gbt_train(norm.apply(X[train][:, cols]), y[train], params,
                          feature_names=sub_names, normalizer=norm)
        y_hat = model.predict(X[test][:, cols])
        rows.append({
            "config": name,
            "dims": int(dims),
            "qwk": qwk(y[test], y_hat, classes=params.class_count),
            "accuracy": float((y[test] == y_hat).mean()),
        })
    return rows


def ablation_intervention(model: GbtEnsemble, X_test: np.ndarray,
                          y_test: np.ndarray, seed: int = 0,
                          families=("jsn", "osp", "scl", "all")) -> list[dict]:
    """Baseline row plus zero/permute rows per family on normalized test
    features, without retraining."""
    X_test = np.asarray(X_test, dtype=float)
    y_test = np.asarray(y_test, dtype=int)
    if model.normalizer is not None:
        Xn = model.normalizer.apply(X_test)
    else:
        Xn = X_test
    names = model.feature_names
    classes = model.params.class_count

    def score(mat):
        proba = model.predict_proba(mat, normalized=True)
        y_hat = proba.argmax(axis=1)
        return (qwk(y_test, y_hat, classes=classes), macro_auc(y_test, proba))

    base_qwk, base_auc = score(Xn)
    rows = [{"intervention": "none", "family": "none", "dims": 0,
             "qwk": base_qwk, "delta_qwk": 0.0, "auc": base_auc}]
    for mode in ("zero", "permute"):
        for fam in families:
            cols = family_columns(names, fam)
            if cols.size == 0:
                continue
            q, a = score(intervene(Xn, fam, mode, seed, feature_names=names))
            rows.append({"intervention": mode, "family": fam,
                         "dims": int(cols.size), "qwk": q,
                         "delta_qwk": q - base_qwk, "auc": a})
    return rows


def evaluate_split(model: GbtEnsemble, X: np.ndarray, y: np.ndarray):
    """Point metrics of the main grading protocol on one split."""
    proba = model.predict_proba(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=int)
    y_hat = proba.argmax(axis=1)
    metrics = classification_metrics(y, y_hat, proba,
                                     classes=model.params.class_count)
    metrics["qwk"] = qwk(y, y_hat, classes=model.params.class_count)
    return metrics, y_hat, proba


def family_table_markdown(rows: list[dict]) -> str:
    lines = ["| Feature configuration | Dims | Test QWK | Test accuracy |",
             "|---|---:|---:|---:|"]
    for r in rows:
        lines.append(f"| {r['config']} | {r['dims']} | {r['qwk']:.4f} | "
                     f"{r['accuracy']:.4f} |")
    return "\n".join(lines)


def intervention_table_markdown(rows: list[dict]) -> str:
    lines = ["| Intervention | Family | Dims | QWK | dQWK | AUC |",
             "|---|---|---:|---:|---:|---:|"]
    for r in rows:
        lines.append(f"| {r['intervention']} | {r['family']} | {r['dims']} | "
                     f"{r['qwk']:.4f} | {r['delta_qwk']:+.4f} | {r['auc']:.4f} |")
    return "\n".join(lines)
