"""Pure-Python run-length kernels, used when the compiled core is unavailable.

Mirrors the API of ``_rle_core`` one to one.
"""

import numpy as np


def area(counts):
    return int(sum(int(c) for c in counts[1::2]))


def _merge(a, b):
    na, nb = len(a), len(b)
    if na == 0 or nb == 0:
        return 0, 0
    i = j = 0
    va = vb = False
    ca, cb = int(a[0]), int(b[0])
    inter = union = 0
    while i < na and j < nb:
        step = ca if ca < cb else cb
        if va and vb:
            inter += step
        if va or vb:
            union += step
        ca -= step
        cb -= step
        if ca == 0:
            i += 1
            va = not va
            if i < na:
                ca = int(a[i])
        if cb == 0:
            j += 1
            vb = not vb
            if j < nb:
                cb = int(b[j])
    return inter, union


def intersect_area(a, b):
    return _merge(a, b)[0]


def union_area(a, b):
    return _merge(a, b)[1]


def frame_stats(a_frames, b_frames, inter_out, union_out):
    for t, (a, b) in enumerate(zip(a_frames, b_frames)):
        if a is None and b is None:
            inter_out[t] = union_out[t] = 0
        elif a is None:
            inter_out[t] = 0
            union_out[t] = area(b)
        elif b is None:
            inter_out[t] = 0
            union_out[t] = area(a)
        else:
            inter_out[t], union_out[t] = _merge(a, b)


def counts_from_string(s):
    out = []
    p, n = 0, len(s)
    while p < n:
        x = k = 0
        more = True
        while more:
            if p >= n:
                raise ValueError("truncated counts string")
            c = s[p] - 48
            x |= (c & 0x1F) << (5 * k)
            more = bool(c & 0x20)
            p += 1
            k += 1
            if not more and (c & 0x10):
                x |= -1 << (5 * k)
        if len(out) > 2:
            x += out[-2]
        out.append(x)
    return np.asarray(out, dtype=np.int64)


def counts_to_string(counts):
    chars = []
    for i in range(len(counts)):
        x = int(counts[i])
        if i > 2:
            x -= int(counts[i - 2])
        more = True
        while more:
            c = x & 0x1F
            x >>= 5
            more = (x != -1) if (c & 0x10) else (x != 0)
            if more:
                c |= 0x20
            chars.append(chr(c + 48))
    return "".join(chars)


def runs_from_flat(flat):
    flat = np.asarray(flat).astype(bool)
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    runs = np.diff(np.concatenate(([0], change, [flat.size])))
    if flat[0]:
        runs = np.concatenate(([0], runs))
    return runs.astype(np.uint32)
