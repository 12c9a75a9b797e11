"""Logistic matrix factorization baseline.

Each node gets an embedding ``u`` and a bias ``b``; a pair scores
``sigmoid(u_i . u_j + b_i + b_j)``.  Training runs mini-batch SGD on train
positives plus negatives resampled every epoch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .graph import Graph
from .rng import SplitMix64, derive_seed
from .splitter import EdgeSplit, sample_negatives


@dataclass
class MfConfig:
    k: int = 16
    lr: float = 0.05
    epochs: int = 200
    l2: float = 1e-4
    neg_ratio: float = 1.0
    batch_size: int = 64


@dataclass
class MfModel:
    embeddings: np.ndarray
    bias: np.ndarray
    seed: int = 0
    losses: list = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.embeddings.shape[1]

    @property
    def final_loss(self) -> float:
        return self.losses[-1] if self.losses else float("nan")


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def pair_loss_and_grad(ui, uj, bi, bj, y, l2):
    """Loss of one labelled pair and its gradient wrt (ui, uj, bi, bj)."""
    s = float(ui @ uj + (bi + bj))
    p = float(sigmoid(np.array([s]))[0])
    p_c = min(max(p, 1e-12), 1 - 1e-12)
    loss = -(y * np.log(p_c) + (1 - y) * np.log(1 - p_c)) + 0.5 * l2 * (ui @ ui + uj @ uj)
    g = p - y
    return float(loss), g * uj + l2 * ui, g * ui + l2 * uj, g, g


def init_mf(n: int, k: int, seed: int) -> MfModel:
    bound = 1.0 / np.sqrt(k)
    emb = SplitMix64(derive_seed(seed, 0)).uniform(-bound, bound, (n, k))
    return MfModel(emb, np.zeros(n), seed=seed)


def train_mf(split: EdgeSplit, g_train: Graph, cfg: MfConfig | None = None, seed: int = 0) -> MfModel:
    cfg = cfg or MfConfig()
    if cfg.k < 1:
        raise InputError("k must be >= 1")
    if cfg.epochs < 1:
        raise InputError("epochs must be >= 1")
    if cfg.lr < 0:
        raise InputError("lr must be >= 0")
    pos = np.asarray(split.train_pos, dtype=np.int64).reshape(-1, 2)
    if len(pos) == 0:
        raise InputError("train_mf needs at least one training positive")
    model = init_mf(g_train.n, cfg.k, seed)
    U, b = model.embeddings, model.bias
    exclude = np.concatenate([split.val_pos, split.test_pos, split.val_neg, split.test_neg]).reshape(-1, 2)
    n_neg = int(round(cfg.neg_ratio * len(pos)))
    for epoch in range(cfg.epochs):
        neg = sample_negatives(g_train, n_neg, derive_seed(seed, 1, epoch), exclude=exclude)
        pairs = np.concatenate([pos, neg])
        y = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
        order = SplitMix64(derive_seed(seed, 2, epoch)).permutation(len(pairs))
        pairs, y = pairs[order], y[order]
        for start in range(0, len(pairs), cfg.batch_size):
            bi_, bj_ = pairs[start:start + cfg.batch_size, 0], pairs[start:start + cfg.batch_size, 1]
            yb = y[start:start + cfg.batch_size]
            ui, uj = U[bi_], U[bj_]
            g = sigmoid(np.einsum("ij,ij->i", ui, uj) + (b[bi_] + b[bj_])) - yb
            gu_i = g[:, None] * uj + cfg.l2 * ui
            gu_j = g[:, None] * ui + cfg.l2 * uj
            step = cfg.lr
            np.add.at(U, bi_, -step * gu_i)
            np.add.at(U, bj_, -step * gu_j)
            np.add.at(b, bi_, -step * g)
            np.add.at(b, bj_, -step * g)
        p = np.clip(sigmoid(np.einsum("ij,ij->i", U[pairs[:, 0]], U[pairs[:, 1]])
                            + (b[pairs[:, 0]] + b[pairs[:, 1]])), 1e-12, 1 - 1e-12)
        model.losses.append(float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p))))
    return model


def score_mf(model: MfModel, i, j) -> float:
    n = len(model.bias)
    if not (0 <= i < n and 0 <= j < n):
        raise InputError(f"pair ({i}, {j}) out of range for n={n}")
    s = model.embeddings[i] @ model.embeddings[j] + (model.bias[i] + model.bias[j])
    return float(sigmoid(np.array([s]))[0])


def score_mf_pairs(model: MfModel, pairs) -> np.ndarray:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    n = len(model.bias)
    if len(pairs) and (pairs.min() < 0 or pairs.max() >= n):
        raise InputError(f"pair index out of range for n={n}")
    U, b = model.embeddings, model.bias
    return sigmoid(np.einsum("ij,ij->i", U[pairs[:, 0]], U[pairs[:, 1]]) + (b[pairs[:, 0]] + b[pairs[:, 1]]))
