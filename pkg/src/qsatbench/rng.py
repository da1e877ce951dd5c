"""Counter-based SplitMix64 streams.

Every random draw is a pure function of ``(seed, stream path, row, slot)``:

    key(seed, p1, p2, ...) = mix(... mix(mix(seed) ^ mix(p1)) ^ mix(p2) ...)
    row_key(key, j)        = mix(key ^ mix(j + 1))
    word(key, j, s)        = mix(row_key(key, j) + (s + 1) * GOLDEN)

where ``mix`` is the SplitMix64 output function. A formula's clause ``j`` draws
from row ``j`` only, so clauses can be generated in any order or in parallel
and still come out bit-identical.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

_G = np.uint64(GOLDEN)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))


def mix(x):
    """SplitMix64 output function on a uint64 array (wrapping arithmetic)."""
    x = np.asarray(x, dtype=np.uint64)
    z = np.atleast_1d(x) + _G
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return (z ^ (z >> _S31)).reshape(x.shape)


def mix_int(x: int) -> int:
    return int(mix(np.array(x & MASK64, dtype=np.uint64)))


def stream_key(seed: int, *path: int) -> int:
    key = mix_int(seed)
    for p in path:
        key = mix_int(key ^ mix_int(p))
    return key


def row_keys(key: int, rows) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.uint64)
    return mix(np.array(key, dtype=np.uint64) ^ mix(rows + np.uint64(1)))


def words(key: int, rows, slots: int) -> np.ndarray:
    """uint64 words, shape ``(len(rows), slots)``."""
    rk = row_keys(key, rows)[:, None]
    s = (np.arange(1, slots + 1, dtype=np.uint64) * _G)[None, :]
    return mix(rk + s)


def uniforms(key: int, rows, slots: int) -> np.ndarray:
    """Doubles in [0, 1) with 53 random bits, shape ``(len(rows), slots)``."""
    return (words(key, rows, slots) >> _S11).astype(np.float64) * 2.0**-53


def derive_seed(seed: int, *path: int) -> int:
    """A 64-bit child seed; used to give each instance of a plan its own seed."""
    return stream_key(seed, *path)
