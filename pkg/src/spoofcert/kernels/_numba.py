"""Numba-compiled twins of :mod:`spoofcert.kernels._numpy`.

Same signatures, same canonical-form contract. The interval routines are
linear merges instead of the vectorized De Morgan rewrites the numpy
path uses.
"""

import numpy as np
from numba import njit

EMPTY = np.empty((0, 2), dtype=np.int64)


@njit(cache=True)
def normalize(iv):
    n = iv.shape[0]
    out = np.empty((n, 2), dtype=np.int64)
    if n == 0:
        return out
    order = np.argsort(iv[:, 0], kind="mergesort")
    k = 0
    cur_lo = iv[order[0], 0]
    cur_hi = iv[order[0], 1]
    for t in range(1, n):
        lo = iv[order[t], 0]
        hi = iv[order[t], 1]
        if lo <= cur_hi + 1:
            if hi > cur_hi:
                cur_hi = hi
        else:
            out[k, 0] = cur_lo
            out[k, 1] = cur_hi
            k += 1
            cur_lo = lo
            cur_hi = hi
    out[k, 0] = cur_lo
    out[k, 1] = cur_hi
    return out[: k + 1].copy()


@njit(cache=True)
def union(a, b):
    na = a.shape[0]
    nb = b.shape[0]
    out = np.empty((na + nb, 2), dtype=np.int64)
    i = 0
    j = 0
    k = 0
    have = False
    cur_lo = 0
    cur_hi = 0
    while i < na or j < nb:
        if j >= nb or (i < na and a[i, 0] <= b[j, 0]):
            lo = a[i, 0]
            hi = a[i, 1]
            i += 1
        else:
            lo = b[j, 0]
            hi = b[j, 1]
            j += 1
        if not have:
            cur_lo = lo
            cur_hi = hi
            have = True
        elif lo <= cur_hi + 1:
            if hi > cur_hi:
                cur_hi = hi
        else:
            out[k, 0] = cur_lo
            out[k, 1] = cur_hi
            k += 1
            cur_lo = lo
            cur_hi = hi
    if have:
        out[k, 0] = cur_lo
        out[k, 1] = cur_hi
        k += 1
    return out[:k].copy()


@njit(cache=True)
def complement(a, top):
    n = a.shape[0]
    out = np.empty((n + 1, 2), dtype=np.int64)
    k = 0
    nxt = 0
    for t in range(n):
        if a[t, 0] > nxt:
            out[k, 0] = nxt
            out[k, 1] = a[t, 0] - 1
            k += 1
        nxt = a[t, 1] + 1
    if nxt <= top:
        out[k, 0] = nxt
        out[k, 1] = top
        k += 1
    return out[:k].copy()


@njit(cache=True)
def intersect(a, b, top):
    na = a.shape[0]
    nb = b.shape[0]
    out = np.empty((na + nb, 2), dtype=np.int64)
    i = 0
    j = 0
    k = 0
    while i < na and j < nb:
        lo = max(a[i, 0], b[j, 0])
        hi = min(a[i, 1], b[j, 1])
        if lo <= hi:
            out[k, 0] = lo
            out[k, 1] = hi
            k += 1
        if a[i, 1] < b[j, 1]:
            i += 1
        else:
            j += 1
    return out[:k].copy()


@njit(cache=True)
def difference(a, b, top):
    na = a.shape[0]
    nb = b.shape[0]
    out = np.empty((na + nb, 2), dtype=np.int64)
    k = 0
    j = 0
    for i in range(na):
        cur = a[i, 0]
        hi = a[i, 1]
        while j < nb and b[j, 1] < cur:
            j += 1
        t = j
        while t < nb and b[t, 0] <= hi:
            if b[t, 0] > cur:
                out[k, 0] = cur
                out[k, 1] = b[t, 0] - 1
                k += 1
            if b[t, 1] + 1 > cur:
                cur = b[t, 1] + 1
            if cur > hi:
                break
            t += 1
        if cur <= hi:
            out[k, 0] = cur
            out[k, 1] = hi
            k += 1
    return out[:k].copy()


@njit(cache=True)
def is_subset(a, b):
    nb = b.shape[0]
    j = 0
    for i in range(a.shape[0]):
        while j < nb and b[j, 1] < a[i, 0]:
            j += 1
        if j == nb or b[j, 0] > a[i, 0] or b[j, 1] < a[i, 1]:
            return False
    return True


@njit(cache=True)
def _contains(a, xs):
    out = np.zeros(xs.shape[0], dtype=np.bool_)
    n = a.shape[0]
    for t in range(xs.shape[0]):
        x = xs[t]
        lo = 0
        hi = n
        while lo < hi:
            mid = (lo + hi) // 2
            if a[mid, 0] <= x:
                lo = mid + 1
            else:
                hi = mid
        if lo > 0 and a[lo - 1, 1] >= x:
            out[t] = True
    return out


def contains(a, xs):
    xs = np.asarray(xs, dtype=np.int64)
    return _contains(a, xs.ravel()).reshape(xs.shape)


@njit(cache=True)
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _mix_arr(zs):
    out = np.empty_like(zs)
    for t in range(zs.shape[0]):
        out[t] = _mix(zs[t])
    return out


def mix64(z):
    z = np.asarray(z, dtype=np.uint64)
    return _mix_arr(z.ravel()).reshape(z.shape)


@njit(cache=True)
def _unknown_mask(keys, src_keys, salt, const_true, pkt_rand, src_rand):
    out = np.empty_like(keys)
    for t in range(keys.shape[0]):
        v = const_true
        v |= pkt_rand & _mix(keys[t] ^ salt)
        v |= src_rand & _mix(src_keys[t] ^ salt)
        out[t] = v
    return out


def unknown_mask(keys, src_keys, salt, const_true, pkt_rand, src_rand):
    return _unknown_mask(
        keys, src_keys, np.uint64(salt), np.uint64(const_true),
        np.uint64(pkt_rand), np.uint64(src_rand),
    )
