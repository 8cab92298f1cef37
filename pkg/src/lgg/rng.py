"""Seedable, implementation-independent random number generation.

Every randomized operation in this package draws from :class:`SplitMix64`,
a 64-bit generator with a published 4-line update (Steele, Lea & Flood 2014,
as used by the xoshiro family). Per-graph streams are derived as
``seed XOR graph_index``, so multi-graph runs are independent of worker
count and scheduling.

Gamma variates use the Marsaglia-Tsang squeeze method (with the alpha < 1
boost); Beta(a, a) is the ratio of two Gamma(a, 1) draws. The contract for
these samplers is distributional (moment checks), not bit-compatibility
with any other library.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix_seed(seed: int, *parts: int) -> int:
    """Hash a seed together with integer tags into a new 64-bit seed.

    Used to derive independent seeds for nested components (models in a
    zoo, plans inside a run) without consuming generator state.
    """
    h = seed & MASK64
    for p in parts:
        h = (h + _GOLDEN + (p & MASK64)) & MASK64
        h = ((h ^ (h >> 30)) * _MIX1) & MASK64
        h = ((h ^ (h >> 27)) * _MIX2) & MASK64
        h ^= h >> 31
    return h


class SplitMix64:
    """SplitMix64 stream with uniform, normal, gamma and beta draws."""

    def __init__(self, seed: int):
        self._state = seed & MASK64
        self._cached_normal: float | None = None

    def next_uint64(self) -> int:
        self._state = (self._state + _GOLDEN) & MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & MASK64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_uint64() >> 11) * 2.0**-53

    def floats(self, n: int) -> np.ndarray:
        """Vectorized batch of ``n`` uniforms, identical to n next_float() calls."""
        if n < 0:
            raise ValueError("n must be >= 0")
        steps = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self._state) + steps * np.uint64(_GOLDEN)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
            z ^= z >> np.uint64(31)
        self._state = (self._state + n * _GOLDEN) & MASK64
        return (z >> np.uint64(11)) * 2.0**-53

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("n must be positive")
        v = int(self.next_float() * n)
        return min(v, n - 1)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of range(n)."""
        out = np.arange(n, dtype=np.int64)
        for i in range(n - 1, 0, -1):
            j = self.next_below(i + 1)
            out[i], out[j] = out[j], out[i]
        return out

    def choose(self, pool: np.ndarray, k: int) -> np.ndarray:
        """Sample ``k`` elements from ``pool`` without replacement.

        Partial Fisher-Yates; k must not exceed len(pool).
        """
        n = len(pool)
        if k > n:
            raise ValueError(f"cannot choose {k} from pool of {n}")
        work = np.array(pool, dtype=np.int64, copy=True)
        for i in range(k):
            j = i + self.next_below(n - i)
            work[i], work[j] = work[j], work[i]
        return work[:k]

    def normal(self) -> float:
        """Standard normal via Box-Muller (second draw cached)."""
        if self._cached_normal is not None:
            z = self._cached_normal
            self._cached_normal = None
            return z
        u1 = 1.0 - self.next_float()  # (0, 1], keeps log finite
        u2 = self.next_float()
        r = math.sqrt(-2.0 * math.log(u1))
        self._cached_normal = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)

    def normals(self, n: int) -> np.ndarray:
        """Vectorized standard normals (independent of the scalar cache)."""
        u = self.floats(2 * n).reshape(2, n) if n else np.empty((2, 0))
        r = np.sqrt(-2.0 * np.log(1.0 - u[0]))
        return r * np.cos(2.0 * np.pi * u[1])

    def gamma(self, shape: float) -> float:
        """Gamma(shape, 1) draw, Marsaglia-Tsang method."""
        if shape <= 0:
            raise ValueError(f"gamma shape must be positive, got {shape}")
        if shape < 1.0:
            u = 1.0 - self.next_float()
            return self.gamma(shape + 1.0) * u ** (1.0 / shape)
        d = shape - 1.0 / 3.0
        c = 1.0 / math.sqrt(9.0 * d)
        while True:
            x = self.normal()
            v = (1.0 + c * x) ** 3
            if v <= 0.0:
                continue
            u = 1.0 - self.next_float()
            if u < 1.0 - 0.0331 * x**4:
                return d * v
            if math.log(u) < 0.5 * x * x + d * (1.0 - v + math.log(v)):
                return d * v

    def beta(self, a: float, b: float | None = None) -> float:
        """Beta(a, b) draw in the open interval (0, 1)."""
        if b is None:
            b = a
        while True:
            g1 = self.gamma(a)
            g2 = self.gamma(b)
            if g1 > 0.0 and g2 > 0.0:
                return g1 / (g1 + g2)


def graph_stream(seed: int, graph_index: int) -> SplitMix64:
    """Stream for graph ``graph_index`` of a multi-graph run: seed XOR index."""
    return SplitMix64((seed ^ graph_index) & MASK64)
