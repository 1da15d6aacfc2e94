"""Portable 64-bit linear congruential generator.

Every seeded draw that must be reproducible outside numpy (SMOTE
interpolation, dataset splits, hashed fallback embeddings) goes through
this generator so that traces can be replayed in any language.
"""

from __future__ import annotations

MULTIPLIER = 6364136223846793005
INCREMENT = 1442695040888963407
MASK64 = (1 << 64) - 1


class Lcg64:
    """state <- state * MULTIPLIER + INCREMENT (mod 2**64).

    ``uniform`` returns the top 53 bits of the new state scaled to [0, 1).
    """

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state * MULTIPLIER + INCREMENT) & MASK64
        return self.state

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform_range(self, low: float, high: float) -> float:
        return low + (high - low) * self.uniform()

    def randbelow(self, n: int) -> int:
        """Integer in [0, n), floor(uniform * n)."""
        if n <= 0:
            raise ValueError("n must be positive")
        return min(int(self.uniform() * n), n - 1)

    def shuffle(self, items: list) -> list:
        """Fisher-Yates from the last position down; returns a new list."""
        out = list(items)
        for i in range(len(out) - 1, 0, -1):
            j = self.randbelow(i + 1)
            out[i], out[j] = out[j], out[i]
        return out


def seed_for_first_uniform(value: float) -> int:
    """Seed whose first ``uniform()`` draw equals ``value`` (for k/2**53 values).

    Inverts one LCG step; used to build hand-traceable fixtures.
    """
    target = (int(round(value * (1 << 53))) << 11) & MASK64
    inverse = pow(MULTIPLIER, -1, 1 << 64)
    return ((target - INCREMENT) * inverse) & MASK64


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & MASK64
    return h
