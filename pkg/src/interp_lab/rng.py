"""Seeded random streams.

Every stream is a Philox-4x64 counter-based generator whose key is derived
from a tuple of integers (base seed, trial index, ...) by SplitMix64 mixing,
so streams for different trials never overlap and can be created in any
order.  Uniform doubles use the top 53 bits of each raw 64-bit word; normal
draws use Box-Muller on consecutive uniform pairs.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(*parts: int) -> int:
    """Hash a tuple of non-negative integers into a single 64-bit seed."""
    h = 0x6A09E667F3BCC908
    for part in parts:
        h = splitmix64(h ^ (int(part) & _MASK64))
    return h


class Stream:
    """A counter-based random stream keyed by ``derive_seed(*parts)``."""

    def __init__(self, *parts: int):
        if not parts:
            parts = (0,)
        self.parts = tuple(int(p) for p in parts)
        k0 = derive_seed(*self.parts)
        k1 = splitmix64(k0)
        self._bitgen = np.random.Philox(key=np.array([k0, k1], dtype=np.uint64))

    def spawn(self, *more: int) -> "Stream":
        return Stream(*self.parts, *more)

    def raw(self, size: int) -> np.ndarray:
        return self._bitgen.random_raw(int(size))

    def uniform(self, size) -> np.ndarray:
        """Doubles in [0, 1)."""
        shape = (size,) if np.isscalar(size) else tuple(size)
        count = int(np.prod(shape))
        bits = self.raw(count) >> np.uint64(11)
        return (bits.astype(np.float64) * 2.0**-53).reshape(shape)

    def normal(self, size) -> np.ndarray:
        """Standard normals via Box-Muller; values fill the shape in C order."""
        shape = (size,) if np.isscalar(size) else tuple(size)
        count = int(np.prod(shape))
        pairs = (count + 1) // 2
        u = self.uniform(2 * pairs).reshape(pairs, 2)
        radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))  # 1 - u lies in (0, 1]
        angle = 2.0 * np.pi * u[:, 1]
        z = np.empty((pairs, 2))
        z[:, 0] = radius * np.cos(angle)
        z[:, 1] = radius * np.sin(angle)
        return z.reshape(-1)[:count].reshape(shape)

    def categorical(self, cum_probs, size=None) -> np.ndarray:
        """Inverse-CDF draws: first index whose cumulative probability >= u.

        ``cum_probs`` is either a 1-D cumulative vector (shared by all draws)
        or an (m, k) array of per-draw cumulative rows.  ``u`` is drawn from
        (0, 1] so zero-probability classes are never selected.
        """
        cum = np.asarray(cum_probs, dtype=np.float64)
        if cum.ndim == 1:
            u = 1.0 - self.uniform(size)
            idx = np.searchsorted(cum, u, side="left")
            return np.minimum(idx, cum.size - 1)
        u = 1.0 - self.uniform(cum.shape[0])
        idx = (cum < u[:, None]).sum(axis=1)
        return np.minimum(idx, cum.shape[1] - 1)
