"""Portable seeded random streams.

SplitMix64 for the raw 64-bit sequence and Box-Muller for normals. Both are
integer/IEEE-double arithmetic only, so a seed yields the same values on any
platform and in any language that reimplements them. Child streams are keyed
through BLAKE2b so that adding a key never perturbs sibling streams.
"""

from __future__ import annotations

import hashlib
import math

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministically mix ``seed`` with integer ``keys`` into a new 64-bit seed."""
    h = hashlib.blake2b(digest_size=8)
    for part in (seed, *keys):
        h.update(int(part).to_bytes(16, "little", signed=True))
    return int.from_bytes(h.digest(), "little")


class RngStream:
    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._state = self.seed
        self._spare: float | None = None

    def derive(self, *keys: int) -> "RngStream":
        return RngStream(derive_seed(self.seed, *keys))

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        """Uniform double in ``[low, high)`` with 53 random bits."""
        u = (self.next_u64() >> 11) * (1.0 / (1 << 53))
        return low + (high - low) * u

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("n must be positive")
        return min(int(self.uniform() * n), n - 1)

    def normal(self, mean: float = 0.0, std: float = 1.0) -> float:
        if self._spare is not None:
            z, self._spare = self._spare, None
            return mean + std * z
        # 1 - u keeps the log argument in (0, 1]
        u1 = 1.0 - self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        self._spare = r * math.sin(theta)
        return mean + std * r * math.cos(theta)
