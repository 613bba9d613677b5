"""
Reproducible random streams.

Every stream is a numpy Philox generator (counter-based, identical output
on every platform) whose key is splitmix64(seed ^ splitmix64(stream_id)).
"""
from typing import *

import numpy as np

from .errors import DomainError

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def stream_key(seed: int, stream_id: int) -> int:
    return splitmix64((seed & MASK64) ^ splitmix64(stream_id & MASK64))


class RngStream:
    def __init__(self, seed: int = 0, stream_id: int = 0) -> None:
        if not 0 <= seed <= MASK64 or not 0 <= stream_id <= MASK64:
            raise DomainError("seed and stream_id must be 64-bit unsigned integers")
        self.seed = seed
        self.stream_id = stream_id
        self.bit_generator = np.random.Philox(key=stream_key(seed, stream_id))
        self.generator = np.random.Generator(self.bit_generator)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def random(self, size=None):
        return self.generator.random(size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size=size)

    def randbelow(self, bound: int) -> int:
        """Exactly uniform integer in [0, bound) for arbitrarily large bound."""
        if bound <= 0:
            raise DomainError("bound must be positive")
        if bound < 1 << 63:
            return int(self.generator.integers(0, bound))
        bits = bound.bit_length()
        words = (bits + 63) // 64
        while True:
            raw = self.bit_generator.random_raw(words)
            value = int.from_bytes(np.asarray(raw, dtype="<u8").tobytes(), "little")
            value >>= words * 64 - bits
            if value < bound:
                return value

    def spawn(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)
