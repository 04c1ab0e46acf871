"""Counter-based uniform streams with random access.

Every uniform is a pure function of ``(seed, substream, position)``, so a
Monte Carlo trial sees the same numbers no matter which worker thread runs it
or in which order trials are scheduled.  The construction is SplitMix64 with
random access:

* ``mix64`` is the SplitMix64 output finalizer
  ``z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31``
  (all arithmetic modulo 2**64).
* the key of substream ``i`` is
  ``mix64(mix64(seed) + (i + 1) * 0xD1B54A32D192ED03)``.
* draw ``j`` (0-based) of a substream is
  ``mix64(key + (j + 1) * 0x9E3779B97F4A7C15) >> 11`` scaled by ``2**-53``,
  a double in ``[0, 1)``.

Only integer operations are involved, so streams are identical on every
platform.
"""

from __future__ import annotations

import numba as nb
import numpy as np

__all__ = ["MASK64", "mix64", "substream_key", "substream_keys", "uniform_block"]

MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_KEY_GAMMA = 0xD1B54A32D192ED03

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_G = np.uint64(_GAMMA)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_TWO_M53 = 2.0**-53


def mix64(z: int) -> int:
    """SplitMix64 finalizer on Python integers."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def substream_key(seed: int, substream: int = 0) -> int:
    return mix64((mix64(seed & MASK64) + (substream + 1) * _KEY_GAMMA) & MASK64)


def substream_keys(seed: int, substreams) -> np.ndarray:
    return np.array([substream_key(seed, int(i)) for i in substreams], dtype=np.uint64)


@nb.njit(cache=True, nogil=True)
def _uniform_block(keys, start, stop):
    out = np.empty((keys.shape[0], stop - start))
    for i in range(keys.shape[0]):
        key = keys[i]
        for j in range(start, stop):
            z = key + (np.uint64(j) + _ONE) * _G
            z = (z ^ (z >> _S30)) * _M1
            z = (z ^ (z >> _S27)) * _M2
            z = z ^ (z >> _S31)
            out[i, j - start] = np.float64(z >> _S11) * _TWO_M53
    return out


def uniform_block(keys, start: int, stop: int) -> np.ndarray:
    """Uniforms at positions ``start <= j < stop`` for each key, one row per key."""
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    return _uniform_block(keys, np.int64(start), np.int64(stop))
