"""Deterministic counter-based pseudorandom streams.

Every draw is a pure function of ``(seed, stream tag, counter)`` so generated
instances are byte-identical across runs and platforms, and so separate
purposes (sparsity pattern, entry values, Gaussian draws, constraint
selection) never perturb each other.  The algorithm, fixed for the life of the
file formats:

* 64-bit finalizer ``mix64`` (all arithmetic mod 2**64)::

      z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
      z ^= z >> 27;  z *= 0x94D049BB133111EB
      z ^= z >> 31

* stream seed for tag ``t``:  ``mix64(mix64(seed) XOR t)``
* ``i``-th raw output:        ``mix64(stream_seed + (i + 1) * 0x9E3779B97F4A7C15)``
* uniform double in [0, 1):   top 53 bits, ``(raw >> 11) * 2**-53``
* normal deviates: Box-Muller on consecutive uniform pairs ``(u_{2t}, u_{2t+1})``
  with ``r = sqrt(-2 log(1 - u_{2t}))``; outputs are interleaved as
  ``r cos(2 pi u_{2t+1}), r sin(2 pi u_{2t+1})``.
"""

from __future__ import annotations

import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)

# stream tags, one per logical purpose
PATTERN = 1
VALUES = 2
GAUSS = 3
CONSTRAINTS = 4


def mix64(z):
    """SplitMix64 finalizer on uint64 scalars or arrays (wraps mod 2**64)."""
    z = np.uint64(z) if np.isscalar(z) else np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


class Stream:
    """One counter-based output stream for a ``(seed, tag)`` pair."""

    def __init__(self, seed: int, tag: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.tag = int(tag)
        self._base = mix64(mix64(np.uint64(self.seed)) ^ np.uint64(self.tag))
        self._counter = 0

    def raw(self, count: int) -> np.ndarray:
        """Next ``count`` raw 64-bit outputs."""
        idx = np.arange(self._counter + 1, self._counter + count + 1, dtype=np.uint64)
        self._counter += count
        with np.errstate(over="ignore"):
            state = self._base + idx * GAMMA
        return mix64(state)

    def uniforms(self, count: int) -> np.ndarray:
        """Next ``count`` doubles uniform on [0, 1)."""
        return (self.raw(count) >> np.uint64(11)) * (2.0 ** -53)

    def normals(self, count: int) -> np.ndarray:
        """Next ``count`` standard normal deviates via Box-Muller."""
        pairs = (count + 1) // 2
        u = self.uniforms(2 * pairs)
        r = np.sqrt(-2.0 * np.log(1.0 - u[0::2]))
        phi = 2.0 * np.pi * u[1::2]
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(phi)
        out[1::2] = r * np.sin(phi)
        return out[:count]

    def select(self, n: int, k: int) -> np.ndarray:
        """``k`` distinct indices from ``range(n)`` by partial Fisher-Yates.

        The ``t``-th swap target is ``t + floor(u_t * (n - t))``; the first
        ``k`` slots of the shuffled index array are returned (order as drawn).
        """
        if not 0 <= k <= n:
            raise ValueError(f"cannot select {k} of {n}")
        if k == 0:
            return np.zeros(0, dtype=np.intp)
        idx = np.arange(n, dtype=np.intp)
        u = self.uniforms(k)
        for t in range(k):
            j = t + int(u[t] * (n - t))
            idx[t], idx[j] = idx[j], idx[t]
        return idx[:k]
