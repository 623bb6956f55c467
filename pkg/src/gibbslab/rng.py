"""SplitMix64 pseudo-random stream.

Tiny, seedable, and stable across platforms; used for all Monte Carlo
sampling so results depend only on the configured seed, never on
scheduling or worker count.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def below(self, n: int) -> int:
        """Integer in [0, n); n small, so modulo bias is negligible but we
        reject to keep the stream exactly uniform."""
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n


def mix_seed(seed: int, index: int) -> int:
    """Derive a per-stream seed; one SplitMix64 step of seed xor index."""
    s = SplitMix64((seed & _MASK) ^ ((index * 0x9E3779B97F4A7C15) & _MASK))
    return s.next_u64()
