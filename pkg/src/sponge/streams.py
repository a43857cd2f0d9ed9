"""Counter-based keyed randomness streams.

Every random quantity in this package is a pure function of a 256-bit stream
key.  Keys are derived by folding letters (or small integer tags) into a
4-lane uint64 state with a splitmix64-style finalizer, so the value attached
to a tree node depends only on (seed, word, axis, draw index).  Lazy or
parallel expansion of a realization therefore always reproduces the same
numbers, and two symbolic paths that share a prefix automatically share the
randomness along it.

All functions are vectorized: a "key array" is a uint64 ndarray whose last
axis has length 4, and letter/draw arguments broadcast against the leading
axes.  Not cryptographic; the mixing is collision-resistant at Monte Carlo
scales (128+ bits of state fed through full-avalanche finalizers).
"""

from __future__ import annotations

import numpy as np

KEY_LANES = 4

# Purpose tags for derive_key: each consumer of randomness gets its own pool
# under one run seed, so adding draws to one never shifts another.
TAG_TREE = 1
TAG_CLOUD = 2
TAG_TRIAL = 3
TAG_DESCENT = 4
TAG_RESAMPLE = 5
TAG_PAIRS = 6

_U64 = np.uint64
_M1 = _U64(0xBF58476D1CE4E5B9)
_M2 = _U64(0x94D049BB133111EB)
_GAMMA = _U64(0x9E3779B97F4A7C15)
_TAG_GAMMA = _U64(0xD1B54A32D192ED03)
_AXIS_MULT = _U64(0x8CB92BA72F3D8DD7)
_DRAW_MULT = _U64(0xAEF17502108EF2D9)
_LANE_SALT = (_U64(0xA0761D6478BD642F), _U64(0xE7037ED1A0B428DB),
              _U64(0x8EBC6AF09C88C6E3), _U64(0x589965CC75374CC3))

_INV_2_53 = float(2.0 ** -53)


def _mix(x):
    """splitmix64 finalizer, elementwise on uint64 arrays."""
    x = (x ^ (x >> _U64(30))) * _M1
    x = (x ^ (x >> _U64(27))) * _M2
    return x ^ (x >> _U64(31))


def root_key(seed: int) -> np.ndarray:
    """Derive the 256-bit root key of a realization from a 64-bit seed."""
    s = _U64(int(seed) & 0xFFFFFFFFFFFFFFFF)
    with np.errstate(over="ignore"):
        lanes = [_mix(s + _GAMMA * _U64(i + 1) + _LANE_SALT[i]) for i in range(KEY_LANES)]
    return np.stack(lanes, axis=-1)


def _fold(keys: np.ndarray, token) -> np.ndarray:
    a, b, c, d = (keys[..., i] for i in range(KEY_LANES))
    with np.errstate(over="ignore"):
        t = _mix(d + _GAMMA * token)
        a2 = _mix(a ^ t)
        b2 = _mix(b + a2 + token)
        c2 = _mix(c ^ b2)
        d2 = _mix(d + c2)
    return np.stack([a2, b2, c2, d2], axis=-1)


def child_key(keys: np.ndarray, letters) -> np.ndarray:
    """Key of the child node reached by appending `letters` (broadcastable)."""
    return _fold(keys, np.asarray(letters, dtype=np.uint64))


def derive_key(keys: np.ndarray, tag: int) -> np.ndarray:
    """An independent substream for a purpose tag (axis pools, trial roots...)."""
    with np.errstate(over="ignore"):
        return _fold(keys, _U64(int(tag)) * _TAG_GAMMA + _TAG_GAMMA)


def word_key(keys: np.ndarray, word) -> np.ndarray:
    """Fold a whole word (iterable of letters) into `keys`."""
    for letter in word:
        keys = child_key(keys, int(letter))
    return keys


def uniforms(keys: np.ndarray, axis, draw) -> np.ndarray:
    """Uniform [0,1) variates for (key, axis, draw index), broadcastable.

    Distinct (axis, draw) pairs give independent streams under one key.
    """
    a, b, c, d = (keys[..., i] for i in range(KEY_LANES))
    ax = np.asarray(axis, dtype=np.uint64)
    dr = np.asarray(draw, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = _mix(a + _AXIS_MULT * ax + _DRAW_MULT * dr)
        h = _mix(h ^ b)
        h = _mix(h + (c ^ (d >> _U64(1))))
    return (h >> _U64(11)).astype(np.float64) * _INV_2_53


def integers(keys: np.ndarray, axis, draw, n: int) -> np.ndarray:
    """Integers in [0, n) derived from the same stream as `uniforms`."""
    return np.minimum((uniforms(keys, axis, draw) * n).astype(np.int64), n - 1)


def subseed(seed: int, index: int) -> int:
    """A derived 63-bit integer seed (environment seeds for probe sweeps)."""
    with np.errstate(over="ignore"):
        v = _mix(_U64(int(seed) & 0xFFFFFFFFFFFFFFFF) + _GAMMA * _U64(index + 1))
    return int(v) & 0x7FFFFFFFFFFFFFFF
