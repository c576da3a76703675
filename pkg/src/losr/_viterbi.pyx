# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Trigram Viterbi decoding, compiled kernel.

Mirrors _viterbi_py.decode exactly: same table layout, same fold order for
the log-space sums and the same ascending-index tie-breaking, so the two
kernels are interchangeable bit for bit.
"""

import numpy as np


def decode(double[:, :, ::1] trans, double[:, ::1] stop, double[:, ::1] emit):
    cdef int n = emit.shape[0]
    cdef int T = emit.shape[1]
    cdef int start = T
    cdef double NEG = float("-inf")

    dp_arr = np.full((T + 1, T), NEG)
    cdef double[:, ::1] dp = dp_arr
    cdef double[:, ::1] ndp
    cdef int[:, ::1] bp
    cdef int i, u, v, w, x, bx
    cdef double cand, acc, score

    for v in range(T):
        dp[start, v] = trans[start, start, v] + emit[0, v]

    backpointers = []
    for i in range(1, n):
        ndp_arr = np.full((T + 1, T), NEG)
        bp_arr = np.zeros((T, T), dtype=np.int32)
        ndp = ndp_arr
        bp = bp_arr
        for v in range(T):
            for w in range(T):
                acc = NEG
                bx = 0
                for x in range(T + 1):
                    cand = dp[x, v] + trans[x, v, w]
                    if cand > acc:
                        acc = cand
                        bx = x
                bp[v, w] = bx
                ndp[v, w] = acc + emit[i, w]
        dp_arr = ndp_arr
        dp = dp_arr
        backpointers.append(bp_arr)

    cdef double best = NEG
    cdef int best_u = -1
    cdef int best_v = -1
    for v in range(T):
        for u in range(T + 1):
            score = dp[u, v] + stop[u, v]
            if score > best:
                best = score
                best_u = u
                best_v = v
    if best_v < 0 or best == NEG:
        raise ValueError("no admissible tag sequence")

    tags = [0] * n
    tags[n - 1] = best_v
    if n >= 2:
        tags[n - 2] = best_u
        for i in range(n - 1, 1, -1):
            tags[i - 2] = int(backpointers[i - 1][tags[i - 1], tags[i]])
    return tags, float(best)
