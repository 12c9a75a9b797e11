"""Undirected graph storage and the symmetric GCN propagation matrix."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .errors import InputError


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected, unweighted graph in CSR layout.

    ``indices[indptr[i]:indptr[i+1]]`` is the sorted neighbor list of node i.
    Self-loops are never stored.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def num_edges(self) -> int:
        return len(self.indices) // 2

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def edges(self) -> np.ndarray:
        """Canonical (m, 2) edge array, i < j, sorted lexicographically."""
        rows = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)
        keep = rows < self.indices
        return np.stack([rows[keep], self.indices[keep]], axis=1)

    def has_edge(self, i: int, j: int) -> bool:
        nb = self.neighbors(i)
        k = np.searchsorted(nb, j)
        return bool(k < len(nb) and nb[k] == j)

    def edge_keys(self) -> np.ndarray:
        """Sorted int64 keys ``i * n + j`` (i < j) for fast membership tests."""
        e = self.edges()
        return e[:, 0] * self.n + e[:, 1]

    def dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        rows = np.repeat(np.arange(self.n), self.degrees)
        a[rows, self.indices] = 1.0
        return a

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={self.num_edges})"


def build_graph(edge_list: Iterable, n: int) -> Graph:
    """Deduplicate, symmetrize and drop self-loops from ``edge_list``."""
    n = int(n)
    if n < 1:
        raise InputError(f"node count must be >= 1, got {n}")
    pairs = np.asarray(list(edge_list) if not isinstance(edge_list, np.ndarray) else edge_list,
                       dtype=np.int64).reshape(-1, 2)
    bad = (pairs < 0) | (pairs >= n)
    if bad.any():
        k = int(np.argmax(bad.any(axis=1)))
        i, j = pairs[k]
        raise InputError(f"edge ({i}, {j}) has an index outside [0, {n})")
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    keys = np.unique(lo * n + hi)
    lo, hi = keys // n, keys % n
    rows = np.concatenate([lo, hi])
    cols = np.concatenate([hi, lo])
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    return Graph(n, _frozen(indptr), _frozen(cols.astype(np.int64)))


@dataclass(frozen=True, eq=False)
class NormAdj:
    """CSR storage of D^-1/2 (A + I) D^-1/2 (degrees counted with the self-loop)."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    def dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=(self.n, self.n))

    def entry(self, i: int, j: int) -> float:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        k = lo + np.searchsorted(self.indices[lo:hi], j)
        if k < hi and self.indices[k] == j:
            return float(self.data[k])
        return 0.0


def normalize_adjacency(g: Graph) -> NormAdj:
    n = g.n
    deg = g.degrees.astype(np.float64) + 1.0
    rows = np.repeat(np.arange(n, dtype=np.int64), g.degrees)
    all_rows = np.concatenate([rows, np.arange(n, dtype=np.int64)])
    all_cols = np.concatenate([g.indices, np.arange(n, dtype=np.int64)])
    order = np.lexsort((all_cols, all_rows))
    all_rows, all_cols = all_rows[order], all_cols[order]
    # d_i * d_j is commutative in IEEE arithmetic, so entries are exactly symmetric
    data = 1.0 / np.sqrt(deg[all_rows] * deg[all_cols])
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(all_rows, minlength=n), out=indptr[1:])
    return NormAdj(n, _frozen(indptr), _frozen(all_cols), _frozen(data))


def spmm(a: NormAdj, x: np.ndarray) -> np.ndarray:
    """Sparse-dense product ``a @ x``.

    scipy's CSR kernel accumulates each output row over the stored
    (ascending) column order, so the result is reproducible bit for bit.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != a.n:
        raise InputError(f"spmm shape mismatch: adjacency is {a.n}x{a.n}, operand is {x.shape}")
    return np.asarray(a.to_scipy() @ x)
