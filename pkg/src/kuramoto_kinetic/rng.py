"""SplitMix64: a tiny, portable, splittable 64-bit generator.

The stream is fully specified so that other implementations can reproduce it
bit for bit::

    state <- state + 0x9E3779B97F4A7C15            (mod 2^64)
    z <- state
    z <- (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9      (mod 2^64)
    z <- (z ^ (z >> 27)) * 0x94D049BB133111EB      (mod 2^64)
    output z ^ (z >> 31)

Doubles in [0, 1) are ``(output >> 11) * 2^-53``.  ``split()`` seeds a child
generator with the parent's next output.
"""
from __future__ import annotations

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
MASK = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & MASK

    def next_u64(self, n: int) -> np.ndarray:
        # the state advances by a constant, so n outputs can be produced at once
        with np.errstate(over="ignore"):
            steps = np.arange(1, n + 1, dtype=np.uint64) * np.uint64(GOLDEN)
            z = _mix(np.uint64(self.state) + steps)
        self.state = (self.state + int(n) * GOLDEN) & MASK
        return z

    def next_int(self) -> int:
        return int(self.next_u64(1)[0])

    def uniform(self, n: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        u = (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return low + (high - low) * u

    def split(self) -> "SplitMix64":
        return SplitMix64(self.next_int())
