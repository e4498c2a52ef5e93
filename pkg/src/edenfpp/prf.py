"""Keyed counter-style pseudorandom function over integer word sequences.

Every random quantity in the package is a pure function of a 64-bit key and
a canonical word sequence, so the same edge keeps its weight no matter which
window it is enumerated in.  The mixer is the SplitMix64 finalizer, which is
a bijection on 64-bit words.
"""

from __future__ import annotations

import numba as nb
import numpy as np

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TWO_M53 = 2.0**-53
_MASK64 = (1 << 64) - 1

# Key domains; weights and chain randomness never share a key.
DOMAIN_WEIGHTS = 0x57454947
DOMAIN_REPLICA = 0x5245504C
DOMAIN_CHAIN = 0x4348414E


@nb.njit(cache=True, inline="always")
def _mix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@nb.njit(cache=True)
def _hash_rows(key, words):
    n, k = words.shape
    out = np.empty(n, dtype=np.uint64)
    k0 = _mix(key ^ _GOLDEN)
    for i in range(n):
        h = k0
        for j in range(k):
            h = _mix(h ^ words[i, j]) + _GOLDEN
        out[i] = _mix(h ^ np.uint64(k))
    return out


@nb.njit(cache=True)
def _units(key, words):
    h = _hash_rows(key, words)
    out = np.empty(h.shape[0], dtype=np.float64)
    for i in range(h.shape[0]):
        out[i] = np.float64(h[i] >> _S11) * _TWO_M53
    return out


def mix64(value: int) -> int:
    """Scalar SplitMix64 finalizer on a Python int."""
    z = value & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def domain_key(seed: int, domain: int) -> int:
    return mix64((seed & _MASK64) ^ mix64(domain))


def derive_seed(base_seed: int, index: int) -> int:
    """Replica seed; injective in ``index`` for a fixed base seed because
    ``index -> base + index * golden`` is injective mod 2**64 and the mixer
    is a bijection."""
    return mix64(domain_key(base_seed, DOMAIN_REPLICA) + index * 0x9E3779B97F4A7C15)


def as_word_matrix(words) -> np.ndarray:
    arr = np.asarray(words, dtype=np.int64)
    if arr.ndim == 1:
        arr = arr[None, :]
    return np.ascontiguousarray(arr).view(np.uint64)


def hash_words(key: int, words) -> np.ndarray:
    """64-bit hash of each row of ``words`` (signed ints, two's complement)."""
    return _hash_rows(np.uint64(key & _MASK64), as_word_matrix(words))


def uniform_words(key: int, words) -> np.ndarray:
    """Uniform variates in [0, 1) with 53 random bits, one per row."""
    return _units(np.uint64(key & _MASK64), as_word_matrix(words))


@nb.njit(cache=True)
def _units_multi(keys, words):
    out = np.empty((keys.shape[0], words.shape[0]), dtype=np.float64)
    for r in range(keys.shape[0]):
        h = _hash_rows(keys[r], words)
        for i in range(h.shape[0]):
            out[r, i] = np.float64(h[i] >> _S11) * _TWO_M53
    return out


def uniform_words_multi(keys, words) -> np.ndarray:
    """(len(keys), n_rows) matrix; row r equals ``uniform_words(keys[r], words)``."""
    k = np.array([int(x) & _MASK64 for x in keys], dtype=np.uint64)
    return _units_multi(k, as_word_matrix(words))
