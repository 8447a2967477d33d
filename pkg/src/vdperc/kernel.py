"""Compiled twin of the single-run dynamics.

Same algorithm as ClusterForest + the opening rule, flattened onto arrays so
a full sweep of an L=256 lattice costs microseconds per thousand attempts
instead of milliseconds.  Bond order, tie-breaking and wrap detection mirror
the object-level implementation exactly; the test suite asserts bit-identical
run records between the two paths.
"""

import numpy as np
from numba import njit

CLOSED = 0
OPEN = 1
TRIED = 2


@njit(cache=True, inline="always")
def _find(parent, offx, offy, s):
    # walk to the root accumulating the displacement, then compress
    root = s
    ox = np.int64(0)
    oy = np.int64(0)
    while parent[root] != root:
        ox += offx[root]
        oy += offy[root]
        root = parent[root]
    cur = s
    cx = ox
    cy = oy
    while parent[cur] != cur:
        nxt = parent[cur]
        tx = cx - offx[cur]
        ty = cy - offy[cur]
        parent[cur] = root
        offx[cur] = cx
        offy[cur] = cy
        cur = nxt
        cx = tx
        cy = ty
    return root, ox, oy


@njit(cache=True)
def sweep(L, r, opposite, order):
    """Run one attempt schedule to completion.

    Returns (first_wrap, opens, largest_volume, distinct_volumes) where
    first_wrap is the 1-based attempt index of the first winding cluster
    (0 when the final state never wraps).
    """
    n = L * L
    parent = np.empty(n, np.int64)
    volume = np.zeros(n, np.int64)
    offx = np.zeros(n, np.int64)
    offy = np.zeros(n, np.int64)
    state = np.zeros(n, np.uint8)
    for i in range(n):
        parent[i] = i

    nb = np.empty(4, np.int64)
    bdx = np.empty(4, np.int64)
    bdy = np.empty(4, np.int64)
    roots = np.empty(4, np.int64)

    first_wrap = 0
    opens = 0
    for i in range(n):
        s = order[i]
        x = s % L
        y = s // L
        # periodic neighbors in fixed (right, left, up, down) bond order
        nb[0] = s + 1 - L if x == L - 1 else s + 1
        bdx[0] = 1
        bdy[0] = 0
        nb[1] = s - 1 + L if x == 0 else s - 1
        bdx[1] = -1
        bdy[1] = 0
        nb[2] = s + L - n if y == L - 1 else s + L
        bdx[2] = 0
        bdy[2] = 1
        nb[3] = s - L + n if y == 0 else s - L
        bdx[3] = 0
        bdy[3] = -1

        # volumes of the two largest distinct clusters among open neighbors
        m1 = np.int64(0)
        m2 = np.int64(0)
        nroots = 0
        for k in range(4):
            if state[nb[k]] == OPEN:
                rk, _, _ = _find(parent, offx, offy, nb[k])
                dup = False
                for j in range(nroots):
                    if roots[j] == rk:
                        dup = True
                        break
                if dup:
                    continue
                roots[nroots] = rk
                nroots += 1
                v = volume[rk]
                if v > m1:
                    m2 = m1
                    m1 = v
                elif v > m2:
                    m2 = v

        if opposite:
            ok = m2 == 0 or (m1 - m2) < r
        else:
            ok = m2 == 0 or (m1 - m2) >= r
        if not ok:
            state[s] = TRIED
            continue

        state[s] = OPEN
        volume[s] = 1
        opens += 1
        for k in range(4):
            if state[nb[k]] == OPEN:
                ra, ax, ay = _find(parent, offx, offy, s)
                rb, bx, by = _find(parent, offx, offy, nb[k])
                dx = bdx[k]
                dy = bdy[k]
                if ra == rb:
                    if first_wrap == 0 and (ax - bx != dx or ay - by != dy):
                        first_wrap = i + 1
                else:
                    if volume[rb] > volume[ra] or (
                        volume[rb] == volume[ra] and rb < ra
                    ):
                        ra, rb = rb, ra
                        tx = ax
                        ax = bx
                        bx = tx
                        ty = ay
                        ay = by
                        by = ty
                        dx = -dx
                        dy = -dy
                    parent[rb] = ra
                    offx[rb] = ax - bx - dx
                    offy[rb] = ay - by - dy
                    volume[ra] += volume[rb]

    # terminal statistics: largest cluster and distinct volume values
    largest = np.int64(0)
    count = 0
    for i in range(n):
        if state[i] == OPEN and parent[i] == i:
            count += 1
            if volume[i] > largest:
                largest = volume[i]
    vols = np.empty(count, np.int64)
    j = 0
    for i in range(n):
        if state[i] == OPEN and parent[i] == i:
            vols[j] = volume[i]
            j += 1
    distinct = 0
    if count > 0:
        vols.sort()
        distinct = 1
        for i in range(1, count):
            if vols[i] != vols[i - 1]:
                distinct += 1
    return first_wrap, opens, largest, distinct


def warmup():
    """Force JIT compilation (call once before forking worker processes)."""
    sweep(2, 0, False, np.arange(4, dtype=np.int64))
