"""Seeded random streams built on SplitMix64.

SplitMix64 advances its state by a fixed odd constant and runs each state
through an xor-shift-multiply finalizer.  Because the k-th output depends
only on ``seed + k * GAMMA``, whole blocks of the stream can be produced
with vectorized uint64 arithmetic while staying bit-identical to the
scalar definition:

    state_k = seed + (k + 1) * 0x9E3779B97F4A7C15        (mod 2**64)
    z = state_k
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    out_k = z ^ (z >> 31)

Floats are ``(out >> 11) * 2**-53`` in [0, 1).
"""

from __future__ import annotations

import numpy as np

GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
MASK64 = (1 << 64) - 1

_GAMMA = np.uint64(GAMMA)
_MIX1 = np.uint64(MIX1)
_MIX2 = np.uint64(MIX2)


def mix64(z: int) -> int:
    """Scalar SplitMix64 finalizer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministically split a master seed into a child seed."""
    s = seed & MASK64
    for key in keys:
        s = mix64(s ^ mix64((key + 1) * GAMMA))
    return s


class SplitMix64:
    """Counter-based SplitMix64 stream."""

    def __init__(self, seed: int):
        self.seed = int(seed) & MASK64
        self.counter = 0

    def next_u64(self, size: int) -> np.ndarray:
        k = np.arange(self.counter + 1, self.counter + 1 + size, dtype=np.uint64)
        self.counter += size
        z = np.uint64(self.seed) + k * _GAMMA
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))

    def random(self, size: int | tuple = 1) -> np.ndarray:
        shape = (size,) if isinstance(size, int) else tuple(size)
        count = int(np.prod(shape)) if shape else 1
        u = self.next_u64(count) >> np.uint64(11)
        return (u.astype(np.float64) * 2.0**-53).reshape(shape)

    def uniform(self, low: float, high: float, size) -> np.ndarray:
        return low + (high - low) * self.random(size)

    def integers(self, bound: int, size: int) -> np.ndarray:
        """Integers in [0, bound) (53-bit float scaling; bias < 2**-40 for our sizes)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        out = np.floor(self.random(size) * bound).astype(np.int64)
        return np.minimum(out, bound - 1)

    def normal(self, size) -> np.ndarray:
        """Standard normals via Box-Muller on consecutive uniform pairs."""
        shape = (size,) if isinstance(size, int) else tuple(size)
        count = int(np.prod(shape)) if shape else 1
        half = (count + 1) // 2
        u = self.random(2 * half).reshape(half, 2)
        u1 = 1.0 - u[:, 0]  # (0, 1], keeps log finite
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u[:, 1]
        z = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1).ravel()
        return z[:count].reshape(shape)

    def permutation(self, n: int) -> np.ndarray:
        """Uniform permutation of range(n): stable argsort of random 64-bit keys."""
        if n == 0:
            return np.zeros(0, dtype=np.int64)
        keys = self.next_u64(n)
        return np.argsort(keys, kind="stable").astype(np.int64)
