# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: bitset reachability closure and batched factor scoring.

Same interface as _kernels_py; accel.py falls back to that module when this
extension is not built.
"""

import numpy as np

from libc.stdint cimport int32_t, int64_t, uint64_t


cdef extern from *:
    int __builtin_ctzll(unsigned long long) nogil


def reach_closure(int n, list adj):
    """closure[i] = bitmask of nodes reachable from i via >= 1 edge."""
    if n == 0:
        return []
    cdef int words = (n + 63) >> 6
    cdef int nbytes = words * 8
    rows = b"".join(m.to_bytes(nbytes, "little") for m in adj)
    cdef const uint64_t[::1] flat = np.frombuffer(rows, dtype=np.uint64)
    out = np.zeros(n * words, dtype=np.uint64)
    cdef uint64_t[::1] outv = out
    cdef uint64_t[::1] visited = np.zeros(words, dtype=np.uint64)
    cdef uint64_t[::1] frontier = np.zeros(words, dtype=np.uint64)
    cdef uint64_t[::1] nxt = np.zeros(words, dtype=np.uint64)
    cdef int s, w, v, j, base
    cdef uint64_t bits, grow
    with nogil:
        for s in range(n):
            base = s * words
            grow = 0
            for w in range(words):
                visited[w] = flat[base + w]
                frontier[w] = visited[w]
                grow |= frontier[w]
            while grow:
                for w in range(words):
                    nxt[w] = 0
                for w in range(words):
                    bits = frontier[w]
                    while bits:
                        j = (w << 6) + __builtin_ctzll(bits)
                        bits &= bits - 1
                        for v in range(words):
                            nxt[v] |= flat[j * words + v]
                grow = 0
                for w in range(words):
                    frontier[w] = nxt[w] & ~visited[w]
                    visited[w] |= frontier[w]
                    grow |= frontier[w]
            for w in range(words):
                outv[base + w] = visited[w]
    raw = out.tobytes()
    return [
        int.from_bytes(raw[i * nbytes:(i + 1) * nbytes], "little") for i in range(n)
    ]


def score_items(codes, offsets, tables):
    """scores[i] = sum over factors f of tables[offsets[f] + codes[i, f]]."""
    cdef const int32_t[:, ::1] c = np.ascontiguousarray(codes, dtype=np.int32)
    cdef const int64_t[::1] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef const int64_t[::1] tab = np.ascontiguousarray(tables, dtype=np.int64)
    cdef Py_ssize_t n = c.shape[0], k = c.shape[1]
    out = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef Py_ssize_t i, f
    cdef int64_t acc
    with nogil:
        for i in range(n):
            acc = 0
            for f in range(k):
                acc += tab[off[f] + c[i, f]]
            o[i] = acc
    return out
