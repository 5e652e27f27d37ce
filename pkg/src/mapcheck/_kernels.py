"""Compiled inner loops. Every function releases the GIL so that row ranges
can be handed to plain threads."""
import numpy as np
from numba import njit

NIL = -1


@njit(nogil=True, cache=True)
def propagate_rows(pred_offsets, pred_cols, x, accepting, out, lo, hi):
    """Jacobi max-propagation for rows ``[lo, hi)``.

    Returns ``(changed, witness)`` where witness is the smallest accepting
    ``v`` in the range that ended with ``out[v] == v`` (or NIL).
    """
    changed = False
    witness = NIL
    for v in range(lo, hi):
        best = x[v]
        for k in range(pred_offsets[v], pred_offsets[v + 1]):
            u = pred_cols[k]
            c = x[u]
            if accepting[u] and u > c:
                c = u
            if c > best:
                best = c
        out[v] = best
        if best != x[v]:
            changed = True
        if witness == NIL and accepting[v] and best == v:
            witness = v
    return changed, witness


@njit(nogil=True, cache=True)
def proper_reach(offsets, cols, in_set, accepting):
    """Vertices of ``in_set`` reachable by a path of length >= 1 from an
    accepting vertex of ``in_set``, staying inside ``in_set``."""
    n = in_set.shape[0]
    seen = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    top = 0
    for u in range(n):
        if in_set[u] and accepting[u]:
            for k in range(offsets[u], offsets[u + 1]):
                w = cols[k]
                if in_set[w] and not seen[w]:
                    seen[w] = True
                    stack[top] = w
                    top += 1
    while top > 0:
        top -= 1
        u = stack[top]
        for k in range(offsets[u], offsets[u + 1]):
            w = cols[k]
            if in_set[w] and not seen[w]:
                seen[w] = True
                stack[top] = w
                top += 1
    return seen


@njit(nogil=True, cache=True)
def peel_sources(offsets, cols, in_set):
    """Remove vertices with no predecessor inside the set until none remain."""
    n = in_set.shape[0]
    alive = in_set.copy()
    indeg = np.zeros(n, dtype=np.int64)
    for u in range(n):
        if alive[u]:
            for k in range(offsets[u], offsets[u + 1]):
                w = cols[k]
                if alive[w]:
                    indeg[w] += 1
    queue = np.empty(n, dtype=np.int64)
    head = 0
    tail = 0
    for v in range(n):
        if alive[v] and indeg[v] == 0:
            queue[tail] = v
            tail += 1
    while head < tail:
        u = queue[head]
        head += 1
        alive[u] = False
        for k in range(offsets[u], offsets[u + 1]):
            w = cols[k]
            if alive[w]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    queue[tail] = w
                    tail += 1
    return alive
