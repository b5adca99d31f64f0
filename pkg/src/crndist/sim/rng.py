"""Counter-based SplitMix64 stream.

Draw ``k`` (zero based) of the stream seeded with ``seed`` is::

    key = mix64(seed + GAMMA)
    u_k = (mix64(key + (k + 1) * GAMMA) >> 11) * 2**-53

with all arithmetic modulo 2**64. Any draw is addressable in O(1), and
replicate ``k`` of a batch seeded with ``seed`` uses ``seed + k``. The SSA
kernel inlines the same arithmetic; this module is the reference version.
"""

from __future__ import annotations

import math

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
INV_2_53 = 2.0**-53


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def stream_key(seed: int) -> int:
    return mix64(seed + GAMMA)


class CounterRNG:
    """Uniform and exponential draws from a seeded counter stream."""

    def __init__(self, seed: int, counter: int = 0):
        if not 0 <= seed <= MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = seed
        self.key = stream_key(seed)
        self.counter = counter

    def raw(self, k: int) -> int:
        return mix64(self.key + (k + 1) * GAMMA)

    def uniform_at(self, k: int) -> float:
        return (self.raw(k) >> 11) * INV_2_53

    def uniform(self) -> float:
        u = self.uniform_at(self.counter)
        self.counter += 1
        return u

    def exponential(self, rate: float) -> float:
        return -math.log(1.0 - self.uniform()) / rate

    def spawn(self, k: int) -> "CounterRNG":
        """Generator for replicate ``k``."""
        return CounterRNG((self.seed + k) & MASK64)
