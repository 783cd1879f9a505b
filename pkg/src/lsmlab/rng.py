"""Counter-based normal draws keyed by ``(seed, i, j, lane)``.

Every value is a pure function of its key, so results do not depend on
evaluation order, on which entries are requested, or on array shape.  Keys
are mixed with the SplitMix64 finalizer and mapped to normals by Box-Muller.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(z):
    z = z ^ (z >> np.uint64(30))
    z = z * _M1
    z = z ^ (z >> np.uint64(27))
    z = z * _M2
    return z ^ (z >> np.uint64(31))


def _hash(seed, *counters):
    h = _mix(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + _GOLDEN)
    for c in counters:
        h = _mix(h ^ (np.asarray(c).astype(np.uint64) * _GOLDEN + np.uint64(1)))
    return h


def uniform(seed, *counters):
    """Uniform draws in the open interval (0, 1), broadcast over ``counters``."""
    with np.errstate(over="ignore"):
        bits = _hash(seed, *counters) >> np.uint64(11)
    return (bits.astype(np.float64) + 0.5) * 2.0**-53


def normal_pair(seed, i, j):
    """Two independent standard normals per ``(i, j)`` via Box-Muller."""
    i, j = np.broadcast_arrays(np.asarray(i), np.asarray(j))
    u1 = uniform(seed, i, j, np.zeros_like(i))
    u2 = uniform(seed, i, j, np.ones_like(i))
    r = np.sqrt(-2.0 * np.log(u1))
    return r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)
