# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled mesh kernels: grid clustering, edge counting, centroids.

Semantics match _kernels_py exactly (same labels, same booleans); the hot
maps are open-addressing hash tables with linear probing and full-key
equality, so results are exact, not probabilistic.
"""

from libc.math cimport floor
from libc.stdlib cimport free, malloc

import numpy as np

BACKEND_NAME = "cython"

cdef long long EMPTY = -1  # grid coords are clamped to >= 0, edges pack >= 0


cdef inline size_t _finalize(unsigned long long h, size_t mask) noexcept nogil:
    h ^= h >> 33
    h *= 0xff51afd7ed558ccdULL
    h ^= h >> 33
    h *= 0xc4ceb9fe1a85ec53ULL
    h ^= h >> 33
    return <size_t>h & mask


cdef inline size_t _hash3(long long x, long long y, long long z, size_t mask) noexcept nogil:
    cdef unsigned long long h = <unsigned long long>x
    h = h * 0x9E3779B97F4A7C15ULL + <unsigned long long>y
    h = h * 0x9E3779B97F4A7C15ULL + <unsigned long long>z
    return _finalize(h, mask)


cdef inline size_t _capacity(Py_ssize_t n) noexcept nogil:
    cdef size_t cap = 8
    while cap < <size_t>(2 * n + 2):
        cap <<= 1
    return cap


cdef inline long long _clamp(long long value, long long max_coord) noexcept nogil:
    if value < 0:
        return 0
    if value > max_coord:
        return max_coord
    return value


def grid_labels(
    double[:, ::1] points,
    double ox,
    double oy,
    double oz,
    double inv_cell,
    long long max_coord,
):
    """First-occurrence cluster labels for grid-quantized points.

    Cell coordinates are floor((p - origin) * inv_cell) clamped to
    [0, max_coord]. Returns (labels int64 (N,), cluster_count).
    """
    cdef Py_ssize_t n = points.shape[0]
    labels_arr = np.empty(n, dtype=np.int64)
    if n == 0:
        return labels_arr, 0
    cdef long long[::1] labels = labels_arr

    cdef size_t cap = _capacity(n)
    cdef long long* kx = <long long*>malloc(cap * sizeof(long long))
    cdef long long* ky = <long long*>malloc(cap * sizeof(long long))
    cdef long long* kz = <long long*>malloc(cap * sizeof(long long))
    cdef long long* val = <long long*>malloc(cap * sizeof(long long))
    if kx == NULL or ky == NULL or kz == NULL or val == NULL:
        free(kx); free(ky); free(kz); free(val)
        raise MemoryError()

    cdef size_t mask = cap - 1
    cdef size_t slot
    cdef Py_ssize_t i
    cdef long long cx, cy, cz, next_label = 0
    with nogil:
        for slot in range(cap):
            kx[slot] = EMPTY
        for i in range(n):
            cx = _clamp(<long long>floor((points[i, 0] - ox) * inv_cell), max_coord)
            cy = _clamp(<long long>floor((points[i, 1] - oy) * inv_cell), max_coord)
            cz = _clamp(<long long>floor((points[i, 2] - oz) * inv_cell), max_coord)
            slot = _hash3(cx, cy, cz, mask)
            while kx[slot] != EMPTY and not (
                kx[slot] == cx and ky[slot] == cy and kz[slot] == cz
            ):
                slot = (slot + 1) & mask
            if kx[slot] == EMPTY:
                kx[slot] = cx
                ky[slot] = cy
                kz[slot] = cz
                val[slot] = next_label
                next_label += 1
            labels[i] = val[slot]
    free(kx); free(ky); free(kz); free(val)
    return labels_arr, <Py_ssize_t>next_label


def edges_all_shared_twice(long long[:, ::1] tris):
    """True iff every undirected edge occurs in exactly two triangles.

    Expects degenerate rows removed and vertex labels in [0, 2**31).
    """
    cdef Py_ssize_t t = tris.shape[0]
    if t == 0:
        return True
    cdef size_t cap = _capacity(3 * t)
    cdef long long* keys = <long long*>malloc(cap * sizeof(long long))
    cdef long long* counts = <long long*>malloc(cap * sizeof(long long))
    if keys == NULL or counts == NULL:
        free(keys)
        free(counts)
        raise MemoryError()
    cdef size_t mask = cap - 1
    cdef size_t slot
    cdef Py_ssize_t i, k
    cdef long long a, b, swap, key
    cdef bint ok = True
    with nogil:
        for slot in range(cap):
            keys[slot] = EMPTY
        for i in range(t):
            for k in range(3):
                a = tris[i, k]
                b = tris[i, (k + 1) % 3]
                if b < a:
                    swap = a
                    a = b
                    b = swap
                key = (a << 32) | b
                slot = _finalize(<unsigned long long>key, mask)
                while keys[slot] != EMPTY and keys[slot] != key:
                    slot = (slot + 1) & mask
                if keys[slot] == EMPTY:
                    keys[slot] = key
                    counts[slot] = 1
                else:
                    counts[slot] += 1
        for slot in range(cap):
            if keys[slot] != EMPTY and counts[slot] != 2:
                ok = False
                break
    free(keys)
    free(counts)
    return bool(ok)


def label_centroids(double[:, ::1] points, long long[::1] labels, Py_ssize_t count):
    """Mean position per label, shape (count, 3)."""
    out_arr = np.zeros((count, 3), dtype=np.float64)
    weights_arr = np.zeros(count, dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[::1] weights = weights_arr
    cdef Py_ssize_t i, n = points.shape[0]
    cdef long long lab
    with nogil:
        for i in range(n):
            lab = labels[i]
            out[lab, 0] += points[i, 0]
            out[lab, 1] += points[i, 1]
            out[lab, 2] += points[i, 2]
            weights[lab] += 1.0
        for i in range(count):
            if weights[i] > 0.0:
                out[i, 0] /= weights[i]
                out[i, 1] /= weights[i]
                out[i, 2] /= weights[i]
    return out_arr
