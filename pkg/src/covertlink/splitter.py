"""Reproducible positive-edge splits and negative sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .graph import Graph, build_graph
from .rng import SplitMix64, derive_seed

DEFAULT_RATIOS = (0.85, 0.05, 0.10)
PARTITIONS = ("train", "val", "test")


@dataclass
class EdgeSplit:
    n: int
    train_pos: np.ndarray
    val_pos: np.ndarray
    test_pos: np.ndarray
    train_neg: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))
    val_neg: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))
    test_neg: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))
    seed: int = 0
    ratios: tuple = DEFAULT_RATIOS
    train_neg_ratio: float = 1.0
    eval_neg_ratio: float = 1.0

    def train_graph(self) -> Graph:
        """The observed graph used for message passing and heuristics."""
        return build_graph(self.train_pos, self.n)

    def pairs(self, part: str) -> tuple[np.ndarray, np.ndarray]:
        """Stacked (pairs, labels) for one partition, positives first."""
        pos = getattr(self, f"{part}_pos")
        neg = getattr(self, f"{part}_neg")
        pairs = np.concatenate([pos, neg]).astype(np.int64).reshape(-1, 2)
        labels = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
        return pairs, labels


def _as_pairs(edges) -> np.ndarray:
    return np.asarray(edges, dtype=np.int64).reshape(-1, 2)


def _keys(pairs: np.ndarray, n: int) -> np.ndarray:
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    return lo * n + hi


def split_edges(g: Graph, ratios=DEFAULT_RATIOS, seed: int = 0) -> EdgeSplit:
    """Shuffle the canonical edge list and cut it into train/val/test positives.

    Validation and test sizes are ``floor(ratio * m)``; the remainder goes to train.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise InputError(f"ratios must be three non-negative numbers, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise InputError(f"ratios must sum to 1, got sum {sum(ratios)!r}")
    m = g.num_edges
    if m == 0:
        raise InputError("cannot split a graph with no edges")
    edges = g.edges()
    perm = SplitMix64(derive_seed(seed, 0)).permutation(m)
    shuffled = edges[perm]
    n_val = int(math.floor(ratios[1] * m + 1e-9))
    n_test = int(math.floor(ratios[2] * m + 1e-9))
    n_train = m - n_val - n_test
    return EdgeSplit(
        n=g.n,
        train_pos=shuffled[:n_train],
        val_pos=shuffled[n_train:n_train + n_val],
        test_pos=shuffled[n_train + n_val:],
        seed=seed,
        ratios=ratios,
    )


def sample_negatives(g: Graph, count: int, seed: int, exclude=None) -> np.ndarray:
    """Uniform sample without replacement of non-adjacent pairs (i < j) not in ``exclude``."""
    n = g.n
    count = int(count)
    if count < 0:
        raise InputError("negative sample count must be >= 0")
    forbidden = g.edge_keys()
    if exclude is not None and len(exclude):
        ex = _as_pairs(exclude)
        ex = ex[ex[:, 0] != ex[:, 1]]
        forbidden = np.union1d(forbidden, _keys(ex, n))
    available = n * (n - 1) // 2 - len(forbidden)
    if count > available:
        raise InputError(f"cannot sample {count} negatives: only {available} non-edges available")
    if count == 0:
        return np.zeros((0, 2), dtype=np.int64)
    rng = SplitMix64(seed)
    if available < 4 * count:
        iu, ju = np.triu_indices(n, k=1)
        keys = iu.astype(np.int64) * n + ju
        mask = ~np.isin(keys, forbidden)
        cand = np.stack([iu[mask], ju[mask]], axis=1).astype(np.int64)
        return cand[rng.permutation(len(cand))[:count]]
    seen = forbidden
    out = np.zeros(0, dtype=np.int64)
    while len(out) < count:
        batch = max(64, 2 * (count - len(out)))
        a = rng.integers(n, batch)
        b = rng.integers(n, batch)
        keep = a != b
        keys = np.minimum(a, b)[keep] * n + np.maximum(a, b)[keep]
        keys = keys[~np.isin(keys, seen)]
        _, first = np.unique(keys, return_index=True)
        keys = keys[np.sort(first)][: count - len(out)]
        out = np.concatenate([out, keys])
        seen = np.union1d(seen, keys)
    return np.stack([out // n, out % n], axis=1)


def make_split(
    g: Graph,
    ratios=DEFAULT_RATIOS,
    seed: int = 0,
    train_neg_ratio: float = 1.0,
    eval_neg_ratio: float = 1.0,
) -> EdgeSplit:
    """Positive split plus disjoint per-partition negatives."""
    for name, r in (("train_neg_ratio", train_neg_ratio), ("eval_neg_ratio", eval_neg_ratio)):
        if not 0 <= r <= 10:
            raise InputError(f"{name} must lie in [0, 10], got {r}")
    split = split_edges(g, ratios, seed)
    split.train_neg_ratio = float(train_neg_ratio)
    split.eval_neg_ratio = float(eval_neg_ratio)
    taken = np.zeros((0, 2), dtype=np.int64)
    for idx, part in enumerate(PARTITIONS):
        ratio = train_neg_ratio if part == "train" else eval_neg_ratio
        count = int(round(ratio * len(getattr(split, f"{part}_pos"))))
        neg = sample_negatives(g, count, derive_seed(seed, 1, idx), exclude=taken)
        setattr(split, f"{part}_neg", neg)
        taken = np.concatenate([taken, neg])
    return split
