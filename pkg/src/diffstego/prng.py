"""Counter-based 64-bit generator with named, independent streams.

Output ``i`` of a stream is a pure function of ``(seed, label, i)``: the
SplitMix64 finaliser applied to ``key + (i + 1) * GAMMA`` where ``key`` mixes
the seed with an FNV-1a hash of the stream label.  Because nothing is carried
between draws, sender and receiver can evaluate any slice of a stream in any
order and get the same numbers.
"""

from __future__ import annotations

import numpy as np

GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK64 = (1 << 64) - 1

_U64 = np.uint64


def _mix_int(z: int) -> int:
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _U64(30))) * _U64(MIX1)
    z = (z ^ (z >> _U64(27))) * _U64(MIX2)
    return z ^ (z >> _U64(31))


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & MASK64
    return h


def stream_key(seed: int, label: str) -> int:
    if not 0 <= seed <= MASK64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return _mix_int(seed ^ fnv1a64(label.encode("utf-8")))


class CounterStream:
    """Random access into one labelled stream of a seeded generator."""

    def __init__(self, seed: int, label: str):
        self.seed = seed
        self.label = label
        self.key = stream_key(seed, label)

    def uint64(self, start: int, count: int) -> np.ndarray:
        counters = np.arange(start + 1, start + count + 1, dtype=_U64)
        with np.errstate(over="ignore"):
            return _mix_array(_U64(self.key) + counters * _U64(GAMMA))

    def uniform(self, start: int, count: int) -> np.ndarray:
        """Doubles in [0, 1) from the top 53 bits of each output."""
        return (self.uint64(start, count) >> _U64(11)).astype(np.float64) * 2.0**-53

    def integers(self, low: int, high: int, start: int, count: int) -> np.ndarray:
        """Integers uniform on the closed range [low, high]."""
        span = high - low + 1
        # 53-bit floor scaling; bias is at most span / 2**53
        return low + np.floor(self.uniform(start, count) * span).astype(np.int64)

    def normal(self, start: int, count: int) -> np.ndarray:
        """Standard normals by Box-Muller; normal ``j`` consumes outputs 2j and 2j+1."""
        u = self.uniform(2 * start, 2 * count)
        u1 = 1.0 - u[0::2]  # (0, 1], keeps log finite
        u2 = u[1::2]
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
