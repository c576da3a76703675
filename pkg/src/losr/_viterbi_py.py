"""Trigram Viterbi decoding in pure Python (numpy fallback kernel).

The compiled extension in _viterbi.pyx implements the same contract; this
module is the fallback when the extension was not built.  Both kernels must
produce bit-identical scores and identical tie-breaking: candidate
predecessors are scanned in ascending tag order with a strict improvement
test, so among equal-scoring paths the one whose tags read smallest from the
end of the sentence wins.
"""

from __future__ import annotations

import numpy as np

NEG = float("-inf")


def decode(trans, stop, emit):
    """Best tag sequence under a second-order model, in log space.

    trans[x, y, z] is log P(z | x, y) where x, y range over tags plus the
    start symbol (index T) and z over real tags; stop[u, v] is
    log P(stop | u, v); emit[i, z] is log P(token_i | z).  Returns
    (tag index list, total log probability).
    """
    trans = np.asarray(trans, dtype=np.float64)
    stop = np.asarray(stop, dtype=np.float64)
    emit = np.asarray(emit, dtype=np.float64)
    n, T = emit.shape
    start = T

    dp = np.full((T + 1, T), NEG)
    dp[start, :] = trans[start, start, :] + emit[0, :]
    backpointers = []

    for i in range(1, n):
        ndp = np.full((T + 1, T), NEG)
        bp = np.zeros((T, T), dtype=np.int32)
        for v in range(T):
            column = dp[:, v]
            for w in range(T):
                scores = column + trans[:, v, w]
                x = int(np.argmax(scores))
                bp[v, w] = x
                ndp[v, w] = scores[x] + emit[i, w]
        dp = ndp
        backpointers.append(bp)

    best = NEG
    best_u = best_v = -1
    for v in range(T):
        for u in range(T + 1):
            score = dp[u, v] + stop[u, v]
            if score > best:
                best, best_u, best_v = score, u, v
    if best_v < 0 or best == NEG:
        raise ValueError("no admissible tag sequence")

    tags = [0] * n
    tags[n - 1] = best_v
    if n >= 2:
        tags[n - 2] = best_u
        for i in range(n - 1, 1, -1):
            tags[i - 2] = int(backpointers[i - 1][tags[i - 1], tags[i]])
    return tags, float(best)
