"""Counter-based deterministic random values.

Instead of a stateful generator, every random draw is a pure function of a
64-bit seed plus a tuple of integer counters (image index, classifier index,
purpose tag, ...).  Draws can therefore be produced in any order, in chunks,
or in parallel, and always come out identical.

The mixing function is the splitmix64 finalizer.  Three implementations are
kept bit-for-bit identical:

* vectorized numpy (this module),
* scalar njit code in ``_kernels`` (same constants, same op order),
* pure python ints (`mix_py`) used while building augmentation plans.
"""

from __future__ import annotations

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1

# 2**-53: top 53 bits of the hash become a double in [0, 1)
U01_SCALE = 1.0 / 9007199254740992.0


def fmix64(z: np.ndarray | np.uint64) -> np.ndarray | np.uint64:
    """splitmix64 finalizer; accepts uint64 scalars or arrays, wraps mod 2^64."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
        return z ^ (z >> np.uint64(31))


def mix(seed: int, *parts) -> np.ndarray | np.uint64:
    """Hash a seed and integer counters into one uint64.

    Parts may be python ints or uint64 arrays; arrays broadcast, so a single
    call can produce a whole counter grid of draws.
    """
    with np.errstate(over="ignore"):
        h = fmix64(np.uint64(seed & _MASK) + np.uint64(GOLDEN))
        for p in parts:
            if not isinstance(p, np.ndarray):
                p = np.uint64(int(p) & _MASK)
            h = fmix64(h ^ fmix64(p))
    return h


def u01(h: np.ndarray | np.uint64) -> np.ndarray | float:
    """Map uint64 hashes to doubles in [0, 1)."""
    shifted = h >> np.uint64(11)
    if isinstance(shifted, np.ndarray):
        return shifted.astype(np.float64) * U01_SCALE
    return float(shifted) * U01_SCALE


def fmix64_py(z: int) -> int:
    """Pure-python twin of fmix64 (identical bits)."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def mix_py(seed: int, *parts: int) -> int:
    """Pure-python twin of mix (identical bits)."""
    h = fmix64_py((seed + GOLDEN) & _MASK)
    for p in parts:
        h = fmix64_py(h ^ fmix64_py(p & _MASK))
    return h


def fnv1a64(text: str) -> int:
    """FNV-1a hash of a string, for folding image ids into counters."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK
    return h


def u01_py(h: int) -> float:
    return (h >> 11) * U01_SCALE
