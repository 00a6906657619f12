"""Fixed, platform-independent PRNG: xoshiro256** seeded via splitmix64.

Synthetic scenes must be bit-reproducible per seed, so the generator is
pinned by algorithm rather than delegated to library RNGs whose streams may
change between releases. Scalar draws run in Python; bulk array fills go
through a numba kernel that advances the identical state sequence.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_MASK = (1 << 64) - 1


def _splitmix64_next(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31), state


@njit(cache=True)
def _bulk_uniform(s0, s1, s2, s3, n, out):  # pragma: no cover - numba
    for i in range(n):
        r = (s1 * np.uint64(5)) & np.uint64(0xFFFFFFFFFFFFFFFF)
        r = ((r << np.uint64(7)) | (r >> np.uint64(57))) & np.uint64(0xFFFFFFFFFFFFFFFF)
        r = (r * np.uint64(9)) & np.uint64(0xFFFFFFFFFFFFFFFF)
        t = (s1 << np.uint64(17)) & np.uint64(0xFFFFFFFFFFFFFFFF)
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << np.uint64(45)) | (s3 >> np.uint64(19))) & np.uint64(0xFFFFFFFFFFFFFFFF)
        out[i] = np.float64(r >> np.uint64(11)) * (1.0 / 9007199254740992.0)
    return s0, s1, s2, s3


class Xoshiro256StarStar:
    """Deterministic 64-bit generator with uniform/Gaussian helpers."""

    def __init__(self, seed: int):
        sm = seed & _MASK
        state = []
        for _ in range(4):
            value, sm = _splitmix64_next(sm)
            state.append(value)
        # xoshiro must not start from the all-zero state; splitmix64 of any
        # seed never yields four zeros, so no special casing is required.
        self._s = state

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        r = (s1 * 5) & _MASK
        r = ((r << 7) | (r >> 57)) & _MASK
        r = (r * 9) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & _MASK
        self._s = [s0, s1, s2, s3]
        return r

    def uniform(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] (unbiased enough for scene layout)."""
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        return lo + int(self.uniform() * (hi - lo + 1))

    def uniform_range(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform()

    def gaussian_array(self, n: int, sigma: float) -> np.ndarray:
        """n Box-Muller normals with standard deviation sigma."""
        m = n + (n & 1)
        u = self.uniform_array(m)
        # Pair consecutive uniforms; guard log(0).
        u1 = np.maximum(u[0::2], 1e-300)
        u2 = u[1::2]
        r = np.sqrt(-2.0 * np.log(u1)) * sigma
        out = np.empty(m, dtype=np.float64)
        out[0::2] = r * np.cos(2.0 * math.pi * u2)
        out[1::2] = r * np.sin(2.0 * math.pi * u2)
        return out[:n]

    def uniform_array(self, n: int) -> np.ndarray:
        """n uniform doubles in [0, 1), advancing the same stream as uniform()."""
        out = np.empty(n, dtype=np.float64)
        s = [np.uint64(v) for v in self._s]
        s0, s1, s2, s3 = _bulk_uniform(s[0], s[1], s[2], s[3], n, out)
        self._s = [int(s0), int(s1), int(s2), int(s3)]
        return out
