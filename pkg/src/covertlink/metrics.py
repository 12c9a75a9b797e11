"""Threshold metrics, rank AUC and the per-method report record."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import InputError


@dataclass
class Counts:
    tp: int
    fp: int
    tn: int
    fn: int


@dataclass
class BinaryMetrics:
    precision: float
    recall: float
    f1: float
    counts: Counts
    precision_undefined: bool = False


@dataclass
class EvalReport:
    method: str
    precision: float
    recall: float
    f1: float
    auc: float
    threshold: float
    tp: int
    fp: int
    tn: int
    fn: int
    seed: int
    config_hash: str
    best_f1: float | None = None
    best_threshold: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _check(probs, labels):
    probs = np.asarray(probs, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if len(probs) != len(labels):
        raise InputError(f"length mismatch: {len(probs)} scores vs {len(labels)} labels")
    if len(probs) == 0:
        raise InputError("need at least one score")
    return probs, labels.astype(bool)


def f1_from(precision: float, recall: float) -> float:
    return 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0


def binary_metrics(probs, labels, threshold: float = 0.5) -> BinaryMetrics:
    """Predict positive iff ``prob >= threshold``."""
    probs, labels = _check(probs, labels)
    pred = probs >= threshold
    tp = int(np.sum(pred & labels))
    fp = int(np.sum(pred & ~labels))
    fn = int(np.sum(~pred & labels))
    tn = int(np.sum(~pred & ~labels))
    undefined = tp + fp == 0
    precision = 0.0 if undefined else tp / (tp + fp)
    recall = tp / (tp + fn) if tp + fn else 0.0
    return BinaryMetrics(precision, recall, f1_from(precision, recall), Counts(tp, fp, tn, fn), undefined)


def auc(scores, labels) -> float:
    """Mann-Whitney AUC; tied positive/negative pairs count one half."""
    scores, labels = _check(scores, labels)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise InputError("AUC needs at least one positive and one negative")
    ranks = rankdata(scores, method="average")
    # average ranks are half-integers, so this difference is exact
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def best_f1_threshold(probs, labels) -> tuple[float, float]:
    """Scan the smallest score and midpoints between sorted unique scores; lowest threshold wins ties."""
    probs, labels = _check(probs, labels)
    if labels.all() or not labels.any():
        raise InputError("best-F1 scan needs both classes")
    uniq = np.unique(probs)
    candidates = np.concatenate([uniq[:1], (uniq[:-1] + uniq[1:]) / 2.0])
    best_t, best_f1 = float(candidates[0]), -1.0
    for t in candidates:
        f1 = binary_metrics(probs, labels, t).f1
        if f1 > best_f1:
            best_t, best_f1 = float(t), f1
    return best_t, best_f1
