"""Counter-based keyed hashing.

Every random object in the package is a pure function of a 64-bit key and a
counter, computed with the splitmix64 output mixer.  Scalar helpers work on
Python ints; the ``*_nb`` variants are numba kernels that produce bit-identical
values on ``uint64`` arrays.
"""

import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV53 = 2.0 ** -53
_TOP = 1.0 - 2.0 ** -53  # the top grid point would round to 1.0

# domain tags for the independent random collections
TAG_U = 0x55
TAG_A = 0x41
TAG_Y = 0x59
TAG_D = 0x44


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def derive(key: int, part: int) -> int:
    """Child key of ``key`` for an integer ``part`` (negative ints allowed)."""
    return mix64(key ^ mix64((part & MASK64) + GAMMA))


def stream(key: int, counter: int) -> int:
    """Output ``counter`` of the splitmix64 sequence started at ``key``."""
    return mix64(key + counter * GAMMA)


def to_unit(h: int) -> float:
    """Map a 64-bit hash to a double in the open interval (0, 1)."""
    return min(((h >> 11) + 0.5) * _INV53, _TOP)


def trial_key(seed: int, trial: int) -> int:
    return derive(derive(0x5151, seed), trial)


_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U11 = np.uint64(11)
_UM1 = np.uint64(_M1)
_UM2 = np.uint64(_M2)
_UGAMMA = np.uint64(GAMMA)


@njit(cache=True, inline="always")
def mix64_nb(z):
    z = (z ^ (z >> _U30)) * _UM1
    z = (z ^ (z >> _U27)) * _UM2
    return z ^ (z >> _U31)


@njit(cache=True, inline="always")
def to_unit_nb(h):
    return min(((h >> _U11) + 0.5) * _INV53, _TOP)


@njit(cache=True)
def stream_unit_nb(keys, counters):
    out = np.empty(keys.shape[0], dtype=np.float64)
    for i in range(keys.shape[0]):
        out[i] = to_unit_nb(mix64_nb(keys[i] + np.uint64(counters[i]) * _UGAMMA))
    return out


@njit(cache=True)
def vertex_jumps_nb(occ, counts, jumps_done, vkey, deg, nbr):
    """Expand occupied vertices into one jump per parasite.

    Slot ``k`` of vertex ``x`` uses the ``N(x) + k``-th direction of ``x``.
    Returns source ids, 1-based direction counters, direction indices and
    target ids (``-1`` where the neighbour is not materialised yet).
    """
    total = 0
    for x in occ:
        total += counts[x]
    src = np.empty(total, dtype=np.int64)
    slot = np.empty(total, dtype=np.int64)
    dirs = np.empty(total, dtype=np.int64)
    tgt = np.empty(total, dtype=np.int64)
    j = 0
    for x in occ:
        c = counts[x]
        base = jumps_done[x]
        key = vkey[x]
        dx = deg[x]
        for k in range(base + 1, base + c + 1):
            u = to_unit_nb(mix64_nb(key + np.uint64(k) * _UGAMMA))
            d = np.int64(u * dx)
            src[j] = x
            slot[j] = k
            dirs[j] = d
            tgt[j] = nbr[x, d]
            j += 1
        jumps_done[x] = base + c
    return src, slot, dirs, tgt


@njit(cache=True)
def walk_steps_nb(lkey, steps, pos, deg, nbr):
    """Advance every labelled walk by one step, in place on ``steps``.

    Returns direction indices and new positions (``-1`` if unmaterialised).
    """
    m = lkey.shape[0]
    dirs = np.empty(m, dtype=np.int64)
    new = np.empty(m, dtype=np.int64)
    for i in range(m):
        s = steps[i] + 1
        steps[i] = s
        x = pos[i]
        u = to_unit_nb(mix64_nb(lkey[i] + np.uint64(s) * _UGAMMA))
        d = np.int64(u * deg[x])
        dirs[i] = d
        new[i] = nbr[x, d]
    return dirs, new


def mix64_np(z: np.ndarray) -> np.ndarray:
    """Vectorised :func:`mix64` on ``uint64`` arrays (wrapping arithmetic)."""
    z = (z ^ (z >> _U30)) * _UM1
    z = (z ^ (z >> _U27)) * _UM2
    return z ^ (z >> _U31)


def derive_np(key, parts: np.ndarray) -> np.ndarray:
    """Vectorised :func:`derive`; ``key`` may be a scalar or an array."""
    parts = np.asarray(parts).astype(np.int64).view(np.uint64)
    with np.errstate(over="ignore"):
        return mix64_np(np.asarray(key, dtype=np.uint64) ^ mix64_np(parts + _UGAMMA))


def to_unit_np(h: np.ndarray) -> np.ndarray:
    return np.minimum(((h >> _U11).astype(np.float64) + 0.5) * _INV53, _TOP)
