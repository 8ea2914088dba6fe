"""Counter-based random streams that any language can reproduce.

The generator is SplitMix64 used in counter mode.  The ``i``-th output
(``i = 1, 2, ...``) of the stream with 64-bit key ``k`` is::

    mix64(k + i * GAMMA  mod 2**64)

    mix64(z):  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
               z = (z ^ (z >> 27)) * 0x94D049BB133111EB
               return z ^ (z >> 31)                      (all mod 2**64)

with ``GAMMA = 0x9E3779B97F4A7C15``.  The key of a per-trial stream is::

    key(seed, trial, channel) = mix64(seed ^ mix64(GAMMA * (trial + 1) + channel))

Derived draws use only the raw outputs:

* ``uniform()``   = (x >> 11) * 2**-53, in [0, 1)
* ``below(m)``    = (x * m) >> 64, in [0, m)   (multiply-shift; bias < m / 2**64)
* ``bits(k)``     = the top k bits of ceil(k / 64) consecutive outputs, big-endian
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_key(seed: int, trial: int, channel: int = 0) -> int:
    return mix64((seed & MASK64) ^ mix64(GAMMA * (trial + 1) + channel))


class CounterStream:
    """One reproducible stream; state is just ``(key, counter)``."""

    __slots__ = ("key", "counter")

    def __init__(self, key: int, counter: int = 0):
        self.key = key & MASK64
        self.counter = counter

    @classmethod
    def for_trial(cls, seed: int, trial: int, channel: int = 0) -> "CounterStream":
        return cls(stream_key(seed, trial, channel))

    def u64(self) -> int:
        self.counter += 1
        return mix64(self.key + self.counter * GAMMA)

    def uniform(self) -> float:
        return (self.u64() >> 11) * (1.0 / (1 << 53))

    def below(self, m: int) -> int:
        if m < 1:
            raise ValueError("upper bound must be positive")
        if m > 1 << 64:
            return self.bits(m.bit_length() + 64) % m
        return (self.u64() * m) >> 64

    def integer(self, lo: int, hi: int) -> int:
        """Uniform integer in the closed range [lo, hi]."""
        return lo + self.below(hi - lo + 1)

    def bits(self, k: int) -> int:
        if k <= 0:
            return 0
        words = -(-k // 64)
        acc = 0
        for _ in range(words):
            acc = (acc << 64) | self.u64()
        return acc >> (64 * words - k)

    def sign(self) -> int:
        return 1 if self.u64() >> 63 else -1
