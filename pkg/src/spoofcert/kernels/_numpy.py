"""Pure-numpy interval and hashing kernels.

Interval arrays are ``int64`` of shape ``(n, 2)`` holding inclusive
``[lo, hi]`` rows. Every function except :func:`normalize` expects its
interval inputs already canonical (sorted, disjoint, non-adjacent) and
returns canonical output.
"""

import numpy as np

EMPTY = np.empty((0, 2), dtype=np.int64)

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def normalize(iv):
    n = iv.shape[0]
    if n == 0:
        return EMPTY.copy()
    order = np.argsort(iv[:, 0], kind="stable")
    lo = iv[order, 0]
    hi = iv[order, 1]
    run = np.maximum.accumulate(hi)
    starts = np.empty(n, dtype=np.bool_)
    starts[0] = True
    starts[1:] = lo[1:] > run[:-1] + 1
    idx = np.flatnonzero(starts)
    ends = np.empty_like(idx)
    ends[:-1] = idx[1:] - 1
    ends[-1] = n - 1
    return np.column_stack((lo[idx], run[ends]))


def union(a, b):
    if a.shape[0] == 0:
        return b.copy()
    if b.shape[0] == 0:
        return a.copy()
    return normalize(np.concatenate((a, b)))


def complement(a, top):
    if a.shape[0] == 0:
        return np.array([[0, top]], dtype=np.int64)
    lo = np.concatenate(([0], a[:, 1] + 1))
    hi = np.concatenate((a[:, 0] - 1, [top]))
    keep = lo <= hi
    return np.column_stack((lo[keep], hi[keep]))


def intersect(a, b, top):
    if a.shape[0] == 0 or b.shape[0] == 0:
        return EMPTY.copy()
    return complement(union(complement(a, top), complement(b, top)), top)


def difference(a, b, top):
    if a.shape[0] == 0:
        return EMPTY.copy()
    if b.shape[0] == 0:
        return a.copy()
    return intersect(a, complement(b, top), top)


def is_subset(a, b):
    if a.shape[0] == 0:
        return True
    if b.shape[0] == 0:
        return False
    # b is canonical, so each interval of a must sit inside a single b interval
    idx = np.searchsorted(b[:, 0], a[:, 0], side="right") - 1
    if idx[0] < 0:
        return False
    return bool(np.all(b[idx, 1] >= a[:, 1]))


def contains(a, xs):
    """Vectorized membership of every value in ``xs``."""
    xs = np.asarray(xs, dtype=np.int64)
    if a.shape[0] == 0:
        return np.zeros(xs.shape, dtype=np.bool_)
    idx = np.searchsorted(a[:, 0], xs, side="right") - 1
    safe = np.maximum(idx, 0)
    return (idx >= 0) & (a[safe, 1] >= xs)


def mix64(z):
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def unknown_mask(keys, src_keys, salt, const_true, pkt_rand, src_rand):
    salt = np.uint64(salt)
    out = np.full(keys.shape, np.uint64(const_true), dtype=np.uint64)
    out |= np.uint64(pkt_rand) & mix64(keys ^ salt)
    out |= np.uint64(src_rand) & mix64(src_keys ^ salt)
    return out
