"""Seeded random fixtures with a bit-exact documented generator.

The core stream is splitmix64: state advances by 0x9E3779B97F4A7C15,
and each output z is finalized by

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27;  z *= 0x94D049BB133111EB
    z ^= z >> 31

all in 64-bit wrapping arithmetic.  Uniform doubles take the top 53
bits (z >> 11) / 2^53; normals come from Box-Muller pairs.  Everything
downstream (orthogonal mixings, random potentials) consumes this single
stream, so a seed pins every fixture bit-exactly across platforms.
"""

from __future__ import annotations

import math

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def normal(self) -> float:
        # Box-Muller; one draw per call keeps the stream position simple
        u1 = self.uniform()
        while u1 == 0.0:
            u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def normals(self, shape) -> np.ndarray:
        flat = np.array([self.normal() for _ in range(int(np.prod(shape)))])
        return flat.reshape(shape)


def orthogonal_matrix(n: int, seed: int) -> np.ndarray:
    """Deterministic orthogonal n x n matrix from a seeded Gaussian QR.

    The R-diagonal sign fix makes the factorization unique, so equal
    seeds give bit-identical matrices.
    """
    g = SplitMix64(seed).normals((n, n))
    q, r = np.linalg.qr(g)
    return q * np.where(np.diag(r) < 0.0, -1.0, 1.0)


def sign_pattern(shape, seed: int) -> np.ndarray:
    """Deterministic +/-1 field (used by sign-changing potential fixtures)."""
    g = SplitMix64(seed)
    flat = np.array([1.0 if g.next_u64() & 1 else -1.0 for _ in range(int(np.prod(shape)))])
    return flat.reshape(shape)
