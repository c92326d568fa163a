# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled run-length kernels.

Counts are ``uint32`` column-major runs, background first.  The merge loops
release the GIL so frame statistics can be computed from worker threads.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint32_t, int64_t

cnp.import_array()


cdef int64_t _area(const uint32_t[::1] c) noexcept nogil:
    cdef Py_ssize_t i
    cdef int64_t total = 0
    for i in range(1, c.shape[0], 2):
        total += c[i]
    return total


cdef void _merge(const uint32_t[::1] a, const uint32_t[::1] b,
                 int64_t* inter, int64_t* union_) noexcept nogil:
    cdef Py_ssize_t i = 0, j = 0
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0]
    cdef int64_t ca, cb, step
    cdef int va = 0, vb = 0
    cdef int64_t acc_i = 0, acc_u = 0
    if na == 0 or nb == 0:
        inter[0] = 0
        union_[0] = 0
        return
    ca = a[0]
    cb = b[0]
    while i < na and j < nb:
        step = ca if ca < cb else cb
        if va and vb:
            acc_i += step
        if va or vb:
            acc_u += step
        ca -= step
        cb -= step
        if ca == 0:
            i += 1
            va ^= 1
            if i < na:
                ca = a[i]
        if cb == 0:
            j += 1
            vb ^= 1
            if j < nb:
                cb = b[j]
    inter[0] = acc_i
    union_[0] = acc_u


def area(const uint32_t[::1] counts):
    return _area(counts)


def intersect_area(const uint32_t[::1] a, const uint32_t[::1] b):
    cdef int64_t i, u
    with nogil:
        _merge(a, b, &i, &u)
    return i


def union_area(const uint32_t[::1] a, const uint32_t[::1] b):
    cdef int64_t i, u
    with nogil:
        _merge(a, b, &i, &u)
    return u


def frame_stats(list a_frames, list b_frames,
                int64_t[::1] inter_out, int64_t[::1] union_out):
    """Fill per-frame intersection and union areas for two mask sequences.

    ``None`` entries are empty frames.  Both lists must have equal length.
    """
    cdef Py_ssize_t t, n = len(a_frames)
    cdef int64_t i, u
    cdef const uint32_t[::1] ca
    cdef const uint32_t[::1] cb
    for t in range(n):
        a = a_frames[t]
        b = b_frames[t]
        if a is None and b is None:
            inter_out[t] = 0
            union_out[t] = 0
        elif a is None:
            cb = b
            inter_out[t] = 0
            union_out[t] = _area(cb)
        elif b is None:
            ca = a
            inter_out[t] = 0
            union_out[t] = _area(ca)
        else:
            ca = a
            cb = b
            with nogil:
                _merge(ca, cb, &i, &u)
            inter_out[t] = i
            union_out[t] = u


def counts_from_string(bytes s):
    """Decode a compressed COCO counts string into uncompressed runs."""
    cdef Py_ssize_t n = len(s), p = 0, m = 0
    cdef const unsigned char* buf = s
    cdef int64_t x, c
    cdef int k, more
    out = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] o = out
    while p < n:
        x = 0
        k = 0
        more = 1
        while more:
            if p >= n:
                raise ValueError("truncated counts string")
            c = <int64_t>buf[p] - 48
            x |= (c & 0x1f) << (5 * k)
            more = (c & 0x20) != 0
            p += 1
            k += 1
            if not more and (c & 0x10):
                x |= (<int64_t>-1) << (5 * k)
        if m > 2:
            x += o[m - 2]
        o[m] = x
        m += 1
    return out[:m]


def counts_to_string(const uint32_t[::1] counts):
    """Encode runs as a compressed COCO counts string."""
    cdef Py_ssize_t i, n = counts.shape[0], p = 0
    cdef int64_t x, c
    cdef int more
    buf = bytearray(n * 7 + 1)
    cdef unsigned char[::1] b = buf
    for i in range(n):
        x = counts[i]
        if i > 2:
            x -= counts[i - 2]
        more = 1
        while more:
            c = x & 0x1f
            x >>= 5
            if c & 0x10:
                more = x != -1
            else:
                more = x != 0
            if more:
                c |= 0x20
            b[p] = <unsigned char>(c + 48)
            p += 1
    return bytes(buf[:p]).decode("ascii")


cdef extern from "string.h" nogil:
    void* memcpy(void* dst, const void* src, size_t n)

from libc.stdint cimport uint64_t
from libc.stdlib cimport malloc, realloc, free


def runs_from_flat(const unsigned char[::1] flat):
    """Canonical runs of a column-major 0/1 pixel vector.

    Uniform 8-byte words are skipped whole, which is what makes long runs cheap.
    """
    cdef Py_ssize_t n = flat.shape[0], i = 0, k = 0, last = 0, cap = 64
    cdef const unsigned char* p = &flat[0]
    cdef unsigned char cur = 0
    cdef uint64_t word, fill = 0
    cdef uint32_t* buf = <uint32_t*>malloc(cap * sizeof(uint32_t))
    cdef uint32_t* grown
    if buf == NULL:
        raise MemoryError()
    with nogil:
        while i < n:
            if i + 8 <= n:
                memcpy(&word, p + i, 8)
                if word == fill:
                    i += 8
                    continue
            if p[i] != cur:
                if k + 1 >= cap:
                    cap *= 2
                    grown = <uint32_t*>realloc(buf, cap * sizeof(uint32_t))
                    if grown == NULL:
                        break
                    buf = grown
                buf[k] = <uint32_t>(i - last)
                k += 1
                last = i
                cur = p[i]
                fill = 0x0101010101010101 if cur else 0
            i += 1
    if i < n:
        free(buf)
        raise MemoryError()
    buf[k] = <uint32_t>(n - last)
    out = np.empty(k + 1, dtype=np.uint32)
    cdef uint32_t[::1] o = out
    memcpy(&o[0], buf, (k + 1) * sizeof(uint32_t))
    free(buf)
    return out
