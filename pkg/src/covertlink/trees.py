"""CART decision tree and bagged random forest over pair features."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .graph import Graph
from .heuristics import adamic_adar_sum, common_neighbors, _check_pair
from .rng import SplitMix64, derive_seed

N_FEATURES = 7
FEATURE_NAMES = (
    "common_neighbors", "jaccard", "adamic_adar", "preferential_attachment",
    "deg_min", "deg_max", "deg_diff",
)


def edge_features(g: Graph, i: int, j: int, mask_edge: bool = False) -> np.ndarray:
    """Topological feature vector of a pair.

    With ``mask_edge`` the pair's own edge (if present) is ignored, so training
    positives look like the held-out pairs they are meant to imitate.
    """
    i, j = int(i), int(j)
    _check_pair(g, i, j)
    di, dj = int(g.degrees[i]), int(g.degrees[j])
    if mask_edge and g.has_edge(i, j):
        di, dj = di - 1, dj - 1
    common = common_neighbors(g, i, j)
    cn = len(common)
    union = di + dj - cn
    jac = cn / union if union > 0 else 0.0
    aa = adamic_adar_sum(g, common)
    lo, hi = min(di, dj), max(di, dj)
    return np.array([cn, jac, aa, di * dj, lo, hi, hi - lo], dtype=np.float64)


def pair_features(g: Graph, pairs, mask_edge: bool = False) -> np.ndarray:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if len(pairs) == 0:
        return np.zeros((0, N_FEATURES))
    return np.stack([edge_features(g, i, j, mask_edge) for i, j in pairs.tolist()])


@dataclass
class TreeConfig:
    max_depth: int = 6
    min_leaf: int = 5


@dataclass
class ForestConfig:
    n_trees: int = 100
    max_depth: int = 6
    min_leaf: int = 5
    feature_subsample: int | None = None  # None -> round(sqrt(n_features))
    bootstrap: bool = True


@dataclass
class TreeModel:
    """Flat node arrays; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def depth(self) -> int:
        def walk(k):
            if self.feature[k] < 0:
                return 0
            return 1 + max(walk(self.left[k]), walk(self.right[k]))
        return walk(0)

    def equals(self, other: "TreeModel") -> bool:
        return all(np.array_equal(getattr(self, a), getattr(other, a))
                   for a in ("feature", "threshold", "left", "right", "value"))


@dataclass
class ForestModel:
    trees: list
    seeds: list = field(default_factory=list)


def _check_xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2 or len(X) != len(y):
        raise InputError(f"features/labels mismatch: {np.shape(X)} vs {len(y)}")
    if len(y) == 0:
        raise InputError("cannot train on empty data")
    if not np.all(np.isfinite(X)):
        raise InputError("features must be finite")
    return X, y


def _best_split(X, y, idx, features, min_leaf):
    """Lowest weighted Gini; ties go to the lower feature index, then the lower threshold."""
    n = len(idx)
    best = None  # (impurity, feature, threshold)
    for f in features:
        xs = X[idx, f]
        order = np.argsort(xs, kind="stable")
        xs = xs[order]
        cum_pos = np.cumsum(y[idx][order])
        n_left = np.arange(1, n)
        ok = (xs[:-1] < xs[1:]) & (n_left >= min_leaf) & (n - n_left >= min_leaf)
        if not ok.any():
            continue
        k = np.nonzero(ok)[0]
        nl = n_left[k].astype(np.float64)
        nr = n - nl
        pl = cum_pos[k]
        pr = cum_pos[-1] - pl
        imp = (2 * pl * (nl - pl) / nl + 2 * pr * (nr - pr) / nr) / n
        a = int(np.argmin(imp))
        if best is None or imp[a] < best[0]:
            lo, hi = xs[k[a]], xs[k[a] + 1]
            thr = (lo + hi) / 2.0
            if not lo < thr:
                thr = hi
            best = (float(imp[a]), int(f), float(thr))
    return best


def _grow(X, y, cfg_depth, min_leaf, pick_features, rows=None) -> TreeModel:
    feature, threshold, left, right, value = [], [], [], [], []

    def node(idx, depth):
        k = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        pos = float(y[idx].sum())
        value.append(pos / len(idx))
        if depth >= cfg_depth or pos == 0 or pos == len(idx) or len(idx) < 2 * min_leaf:
            return k
        parent = 2 * pos * (len(idx) - pos) / len(idx) / len(idx)
        best = _best_split(X, y, idx, pick_features(), min_leaf)
        if best is None or not best[0] < parent:
            return k
        _, f, thr = best
        go_left = X[idx, f] < thr
        feature[k], threshold[k] = f, thr
        left[k] = node(idx[go_left], depth + 1)
        right[k] = node(idx[~go_left], depth + 1)
        return k

    node(np.arange(len(y)) if rows is None else rows, 0)
    return TreeModel(
        np.array(feature, dtype=np.int64), np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
        np.array(value, dtype=np.float64),
    )


def train_tree(X, y, cfg: TreeConfig | None = None) -> TreeModel:
    cfg = cfg or TreeConfig()
    X, y = _check_xy(X, y)
    all_features = list(range(X.shape[1]))
    return _grow(X, y, cfg.max_depth, max(1, cfg.min_leaf), lambda: all_features)


def train_forest(X, y, cfg: ForestConfig | None = None, seed: int = 0) -> ForestModel:
    cfg = cfg or ForestConfig()
    if cfg.n_trees < 1:
        raise InputError("n_trees must be >= 1")
    X, y = _check_xy(X, y)
    n_rows, n_feat = X.shape
    m_try = cfg.feature_subsample or max(1, int(round(np.sqrt(n_feat))))
    m_try = min(m_try, n_feat)
    trees, seeds = [], []
    for t in range(cfg.n_trees):
        tseed = derive_seed(seed, t)
        rng = SplitMix64(tseed)
        rows = rng.integers(n_rows, n_rows) if cfg.bootstrap else np.arange(n_rows)
        if m_try == n_feat:
            pick = lambda: list(range(n_feat))  # noqa: E731
        else:
            pick = lambda: sorted(rng.permutation(n_feat)[:m_try].tolist())  # noqa: E731
        trees.append(_grow(X, y, cfg.max_depth, max(1, cfg.min_leaf), pick, rows=rows))
        seeds.append(tseed)
    return ForestModel(trees, seeds)


def predict_tree(model: TreeModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    width = int(model.feature.max()) + 1 if len(model.feature) else 0
    if X.shape[1] < width:
        raise InputError(f"feature vectors have {X.shape[1]} columns, model needs {width}")
    node = np.zeros(len(X), dtype=np.int64)
    rows = np.arange(len(X))
    while True:
        f = model.feature[node]
        inner = f >= 0
        if not inner.any():
            return model.value[node]
        go_left = X[rows[inner], f[inner]] < model.threshold[node[inner]]
        node[inner] = np.where(go_left, model.left[node[inner]], model.right[node[inner]])


def predict(model, X) -> np.ndarray:
    """Leaf probability for a tree; mean of tree probabilities for a forest."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != N_FEATURES:
        raise InputError(f"expected {N_FEATURES} features per pair, got {X.shape[1]}")
    return _predict_any(model, X)


def _predict_any(model, X):
    if isinstance(model, ForestModel):
        return np.mean(np.stack([predict_tree(t, X) for t in model.trees]), axis=0)
    return predict_tree(model, X)
