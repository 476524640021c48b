"""From-scratch multiclass gradient-boosted regression trees with a softmax
objective, second-order (Newton) leaf weights, exact greedy splits and
deterministic tie-breaking, plus stratified k-fold assignment."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .errors import NotFittedError, SchemaError
from .features import Normalizer

FORMAT_VERSION = 1


@dataclass
class GbtParams:
    n_rounds: int = 300
    max_depth: int = 6
    learning_rate: float = 0.05
    l1_alpha: float = 0.1
    l2_lambda: float = 1.0
    min_child_weight: float = 1.0
    class_count: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.n_rounds < 1 or self.max_depth < 1:
            raise ValueError("n_rounds and max_depth must be >= 1")
        if not (0 < self.learning_rate <= 1):
            raise ValueError("learning_rate must be in (0, 1]")


@dataclass
class TreeNode:
    feature: int = -1          # -1 marks a leaf
    threshold: float = 0.0
    left: int = -1
    right: int = -1
    value: float = 0.0         # leaf weight, already scaled by the lr


@dataclass
class Tree:
    nodes: list[TreeNode] = field(default_factory=list)

    def _arrays(self):
        cached = getattr(self, "_cache", None)
        if cached is None or cached[0].size != len(self.nodes):
            cached = (
                np.array([n.feature for n in self.nodes], dtype=int),
                np.array([n.threshold for n in self.nodes]),
                np.array([n.left for n in self.nodes], dtype=int),
                np.array([n.right for n in self.nodes], dtype=int),
                np.array([n.value for n in self.nodes]),
            )
            self._cache = cached
        return cached

    def predict(self, X: np.ndarray) -> np.ndarray:
        feat, thr, left, right, value = self._arrays()
        idx = np.zeros(X.shape[0], dtype=int)
        active = np.arange(X.shape[0])
        while active.size:
            node_ids = idx[active]
            f = feat[node_ids]
            interior = f >= 0
            active = active[interior]
            if not active.size:
                break
            node_ids = node_ids[interior]
            f = f[interior]
            go_left = X[active, f] < thr[node_ids]
            idx[active] = np.where(go_left, left[node_ids], right[node_ids])
        return value[idx]

    def split_features(self) -> set[int]:
        return {n.feature for n in self.nodes if n.feature >= 0}


def _soft_threshold(g: float | np.ndarray, alpha: float):
    return np.sign(g) * np.maximum(np.abs(g) - alpha, 0.0)


def _leaf_weight(g_sum: float, h_sum: float, alpha: float, lam: float) -> float:
    return float(-_soft_threshold(g_sum, alpha) / (h_sum + lam))


def _score(g_sum, h_sum, alpha, lam):
    # |soft(g)|^2 / (h + lam); the sign of g cancels in the square
    gs = np.maximum(np.abs(g_sum) - alpha, 0.0)
    return gs * gs / (h_sum + lam)


def _node_split(xs: np.ndarray, gs: np.ndarray, hs: np.ndarray,
                params: GbtParams):
    """Exact greedy split for one node given per-feature value-sorted data.

    xs/gs/hs are (m, d) with every column sorted by feature value. Returns
    (gain, feature, threshold) or None. Equal gains break ties toward the
    lowest feature index, then the lowest threshold, making training
    deterministic regardless of the seed.
    """
    m = xs.shape[0]
    if m < 2:
        return None
    gsum = np.cumsum(gs, axis=0)
    hsum = np.cumsum(hs, axis=0)
    G, H = gsum[-1, 0], hsum[-1, 0]
    gl = gsum[:-1]
    hl = hsum[:-1]
    gr = G - gl
    hr = H - hl
    valid = (xs[1:] > xs[:-1]) \
        & (hl >= params.min_child_weight) & (hr >= params.min_child_weight)
    if not valid.any():
        return None
    alpha, lam = params.l1_alpha, params.l2_lambda
    gain = 0.5 * (_score(gl, hl, alpha, lam) + _score(gr, hr, alpha, lam)
                  - _score(G, H, alpha, lam))
    gain = np.where(valid, gain, -np.inf)
    best_gain = gain.max()
    if not (best_gain > 0):
        return None
    # feature-major flattening: among equal gains argmax picks the lowest
    # feature index first, then the lowest position (= lowest threshold)
    flat = np.argmax(gain.T)
    feat, pos = divmod(int(flat), m - 1)
    threshold = 0.5 * (xs[pos, feat] + xs[pos + 1, feat])
    if not (xs[pos, feat] < threshold):
        threshold = float(xs[pos + 1, feat])  # midpoint rounded onto the left value
    return float(best_gain), int(feat), float(threshold)


def _build_tree(X: np.ndarray, sort_idx: np.ndarray, g: np.ndarray,
                h: np.ndarray, params: GbtParams) -> Tree:
    """Level-wise tree growth over pre-sorted feature orders.

    `sort_idx` is the (n, d) per-feature value argsort of X, computed once
    per training run; each level stably partitions the order columns of a
    node into its children, avoiding any re-sorting.
    """
    tree = Tree()
    n, d = X.shape
    cols = np.arange(d)
    root = TreeNode()
    tree.nodes.append(root)
    # blocks: (node_id, order) where order is (m, d) row indices per feature
    blocks = [(0, sort_idx)]
    for depth in range(params.max_depth + 1):
        next_blocks = []
        for node_id, order in blocks:
            xs = X[order, cols]
            gs = g[order]
            hs = h[order]
            split = (_node_split(xs, gs, hs, params)
                     if depth < params.max_depth else None)
            node = tree.nodes[node_id]
            if split is None:
                node.value = params.learning_rate * _leaf_weight(
                    gs[:, 0].sum(), hs[:, 0].sum(),
                    params.l1_alpha, params.l2_lambda)
                continue
            _, feat, thr = split
            node.feature = feat
            node.threshold = thr
            go = xs[:, feat] < thr  # in feature-feat sorted sequence
            m_left = int(go.sum())
            go_row = np.zeros(n, dtype=bool)
            go_row[order[go, feat]] = True
            left_mask = go_row[order]  # (m, d), same count per column
            order_t = order.T
            lm_t = left_mask.T
            left_order = order_t[lm_t].reshape(d, m_left).T
            right_order = order_t[~lm_t].reshape(d, order.shape[0] - m_left).T
            node.left = len(tree.nodes)
            tree.nodes.append(TreeNode())
            node.right = len(tree.nodes)
            tree.nodes.append(TreeNode())
            next_blocks.append((node.left, left_order))
            next_blocks.append((node.right, right_order))
        blocks = next_blocks
        if not blocks:
            break
    return tree


def softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _weighted_logloss(proba: np.ndarray, y: np.ndarray, w: np.ndarray) -> float:
    p = np.clip(proba[np.arange(len(y)), y], 1e-15, 1.0)
    return float(-(w * np.log(p)).sum() / w.sum())


def inverse_frequency_weights(y: np.ndarray, class_count: int) -> np.ndarray:
    """Inverse class-frequency sample weights, normalized to mean 1."""
    counts = np.bincount(y, minlength=class_count).astype(float)
    w = np.where(counts[y] > 0, 1.0 / np.maximum(counts[y], 1), 1.0)
    return w / w.mean()


@dataclass
class GbtEnsemble:
    params: GbtParams
    base_score: np.ndarray                 # per-class log-odds
    trees: list[list[Tree]]                # [round][class]
    feature_names: list[str]
    normalizer: Normalizer | None = None   # None means inputs are pre-normalized
    loss_history: list[float] = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def _check(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise SchemaError(
                f"expected {self.n_features} features, got {X.shape[1]}")
        return X

    def raw_scores(self, X_norm: np.ndarray) -> np.ndarray:
        scores = np.tile(self.base_score, (X_norm.shape[0], 1))
        for round_trees in self.trees:
            for k, tree in enumerate(round_trees):
                scores[:, k] += tree.predict(X_norm)
        return scores

    def predict_proba(self, X: np.ndarray, *, normalized: bool = False) -> np.ndarray:
        """5-class probabilities; raw inputs are normalized via the embedded
        normalizer unless `normalized=True`."""
        X = self._check(X)
        if not normalized and self.normalizer is not None:
            X = self.normalizer.apply(X)
        return softmax(self.raw_scores(X))

    def predict(self, X: np.ndarray, *, normalized: bool = False) -> np.ndarray:
        return self.predict_proba(X, normalized=normalized).argmax(axis=1)

    def used_features(self) -> set[int]:
        used: set[int] = set()
        for round_trees in self.trees:
            for tree in round_trees:
                used |= tree.split_features()
        return used

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "params": asdict(self.params),
            "base_score": [float(v) for v in self.base_score],
            "feature_names": list(self.feature_names),
            "normalizer": self.normalizer.to_dict() if self.normalizer else None,
            "loss_history": [float(v) for v in self.loss_history],
            "trees": [[[asdict(n) for n in tree.nodes] for tree in rnd]
                      for rnd in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GbtEnsemble":
        if d.get("format_version") != FORMAT_VERSION:
            raise SchemaError(f"unsupported model format {d.get('format_version')}")
        trees = [[Tree([TreeNode(**n) for n in nodes]) for nodes in rnd]
                 for rnd in d["trees"]]
        norm = Normalizer.from_dict(d["normalizer"]) if d["normalizer"] else None
        return cls(params=GbtParams(**d["params"]),
                   base_score=np.array(d["base_score"], dtype=float),
                   trees=trees,
                   feature_names=list(d["feature_names"]),
                   normalizer=norm,
                   loss_history=list(d["loss_history"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "GbtEnsemble":
        return cls.from_dict(json.loads(Path(path).read_text()))


def gbt_train(X: np.ndarray, y: np.ndarray, params: GbtParams | None = None,
              sample_weights: np.ndarray | None = None,
              feature_names=None, normalizer: Normalizer | None = None) -> GbtEnsemble:
    """Train a one-vs-rest softmax boosted ensemble on a normalized matrix.

    Per round and class, a depth-limited regression tree is fit to the first
    and second-order gradients of the weighted softmax cross-entropy; leaf
    weights are Newton steps -G/(H+lambda) with L1 soft-thresholding of G,
    scaled by the learning rate. Splits require strictly positive gain.
    """
    params = params or GbtParams()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if not np.isfinite(X).all():
        raise ValueError("non-finite values in the training matrix")
    if y.min() < 0 or y.max() >= params.class_count:
        raise ValueError("labels outside the class range")
    n, d = X.shape
    if feature_names is None:
        feature_names = [f"f{i:02d}" for i in range(d)]
    if len(feature_names) != d:
        raise SchemaError("feature_names length mismatch")
    if sample_weights is None:
        w = inverse_frequency_weights(y, params.class_count)
    else:
        w = np.asarray(sample_weights, dtype=float)
        if (w <= 0).any():
            raise ValueError("sample weights must be > 0")

    counts = np.bincount(y, minlength=params.class_count).astype(float)
    prior = np.clip((counts * 1.0) / counts.sum(), 1e-12, None)
    base = np.log(prior)
    base = base - base.mean()
    ensemble = GbtEnsemble(params=params, base_score=base, trees=[],
                           feature_names=list(feature_names),
                           normalizer=normalizer)
    if len(np.unique(y)) < 2:
        # degenerate single-class training set: prior-only model
        ensemble.loss_history = [_weighted_logloss(
            softmax(np.tile(base, (n, 1))), y, w)]
        return ensemble

    onehot = np.zeros((n, params.class_count))
    onehot[np.arange(n), y] = 1.0
    scores = np.tile(base, (n, 1))
    sort_idx = np.argsort(X, axis=0)  # X is fixed; sorted orders are reused
    losses = [_weighted_logloss(softmax(scores), y, w)]
    for _ in range(params.n_rounds):
        proba = softmax(scores)
        round_trees = []
        for k in range(params.class_count):
            g = w * (proba[:, k] - onehot[:, k])
            h = w * proba[:, k] * (1.0 - proba[:, k])
            tree = _build_tree(X, sort_idx, g, h, params)
            round_trees.append(tree)
            scores[:, k] += tree.predict(X)
        ensemble.trees.append(round_trees)
        losses.append(_weighted_logloss(softmax(scores), y, w))
        if losses[-1] > losses[-2] + 1e-12:
            warnings.warn(
                f"training loss increased at round {len(ensemble.trees)}: "
                f"{losses[-2]:.6g} -> {losses[-1]:.6g}")
    ensemble.loss_history = losses
    return ensemble


def stratified_kfold(y: np.ndarray, k: int = 5, seed: int = 0) -> np.ndarray:
    """Deterministic stratified fold assignment; per-class fold counts differ
    by at most one. Classes with fewer than k members are distributed
    round-robin with a warning."""
    if k < 2:
        raise ValueError("k must be >= 2")
    y = np.asarray(y, dtype=int)
    rng = np.random.default_rng(seed)
    folds = np.empty(len(y), dtype=int)
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        if idx.size < k:
            warnings.warn(f"class {cls} has fewer than {k} members; "
                          "distributing round-robin")
        perm = rng.permutation(idx.size)
        folds[idx[perm]] = np.arange(idx.size) % k
    return folds
