"""Neighborhood link-prediction heuristics."""

from __future__ import annotations

import enum
import math

import numpy as np

from .errors import InputError
from .graph import Graph


class HeuristicMethod(str, enum.Enum):
    COMMON_NEIGHBORS = "common_neighbors"
    JACCARD = "jaccard"
    ADAMIC_ADAR = "adamic_adar"
    PREFERENTIAL_ATTACHMENT = "preferential_attachment"


def _check_pair(g: Graph, i: int, j: int) -> None:
    if not (0 <= i < g.n and 0 <= j < g.n):
        raise InputError(f"pair ({i}, {j}) out of range for n={g.n}")
    if i == j:
        raise InputError(f"pair ({i}, {j}) is a self-pair")


def common_neighbors(g: Graph, i: int, j: int) -> np.ndarray:
    """Sorted common neighbors of i and j."""
    return np.intersect1d(g.neighbors(i), g.neighbors(j), assume_unique=True)


def adamic_adar_sum(g: Graph, common: np.ndarray) -> float:
    # degree-1 nodes cannot be shared neighbors of two distinct nodes,
    # but guard anyway: ln 1 = 0
    deg = g.degrees
    total = 0.0
    for z in common.tolist():
        if deg[z] > 1:
            total += 1.0 / math.log(deg[z])
    return total


def heuristic_score(g: Graph, i: int, j: int, method) -> float:
    i, j = int(i), int(j)
    _check_pair(g, i, j)
    method = HeuristicMethod(method)
    if method is HeuristicMethod.PREFERENTIAL_ATTACHMENT:
        deg = g.degrees
        return float(deg[i] * deg[j])
    common = common_neighbors(g, i, j)
    if method is HeuristicMethod.COMMON_NEIGHBORS:
        return float(len(common))
    if method is HeuristicMethod.JACCARD:
        deg = g.degrees
        union = int(deg[i] + deg[j]) - len(common)
        return len(common) / union if union > 0 else 0.0
    return adamic_adar_sum(g, common)


def score_pairs(g: Graph, pairs, method) -> np.ndarray:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    return np.array([heuristic_score(g, i, j, method) for i, j in pairs.tolist()], dtype=np.float64)


def minmax_scale(scores: np.ndarray) -> np.ndarray:
    """Map scores onto [0, 1]; a constant vector maps to all zeros."""
    scores = np.asarray(scores, dtype=np.float64)
    if len(scores) == 0:
        return scores.copy()
    lo, hi = scores.min(), scores.max()
    if hi == lo:
        return np.zeros_like(scores)
    return (scores - lo) / (hi - lo)
