"""Slow reference dynamics used to validate the fast engine.

Every attempt recomputes the entire cluster structure of the open sites by
breadth-first search, tracking positions in the unwrapped plane so winding
clusters are recognized when a bond reaches an already-visited site at an
inconsistent position.  Nothing here touches the union-find machinery: the
two implementations share only site ids and schedules, so a common-mode bug
is implausible.
"""

from collections import deque
from itertools import permutations

import numpy as np

from .engine import FinalStats, ModelParams, RunRecord
from .ensemble import StatsAccumulator, WrapCurve

MAX_NAIVE_L = 64
MAX_EXACT_L = 3


def _may_open(m1, m2, r, mode):
    # the rule, restated from scratch: at most one adjacent cluster always
    # opens; otherwise compare the top-two volume difference against r
    if m2 == 0:
        return True
    difference = abs(m1 - m2)
    if mode == "opposite":
        return difference < r
    return difference >= r


def _site_neighbors(L, s):
    """Periodic neighbor bonds of s, modulo arithmetic throughout."""
    x, y = s % L, s // L
    return (
        ((x + 1) % L + y * L, 1, 0),
        ((x - 1) % L + y * L, -1, 0),
        (x + ((y + 1) % L) * L, 0, 1),
        (x + ((y - 1) % L) * L, 0, -1),
    )


def _clusters(L, is_open):
    """Label all clusters of open sites by BFS.

    Returns (label per site or -1, volume per label, wrapped) where wrapped
    is True when any cluster winds around the torus in either direction:
    a bond into an already-placed site whose recorded plane position differs
    from the one implied by the bond closes a cycle of winding length != 0.
    """
    n = L * L
    label = [-1] * n
    posx = [0] * n
    posy = [0] * n
    volumes = []
    wrapped = False
    for start in range(n):
        if not is_open[start] or label[start] >= 0:
            continue
        lab = len(volumes)
        label[start] = lab
        posx[start] = 0
        posy[start] = 0
        size = 1
        queue = deque([start])
        while queue:
            cur = queue.popleft()
            cx, cy = posx[cur], posy[cur]
            for nb, dx, dy in _site_neighbors(L, cur):
                if not is_open[nb]:
                    continue
                if label[nb] < 0:
                    label[nb] = lab
                    posx[nb] = cx + dx
                    posy[nb] = cy + dy
                    size += 1
                    queue.append(nb)
                elif posx[nb] != cx + dx or posy[nb] != cy + dy:
                    wrapped = True
        volumes.append(size)
    return label, volumes, wrapped


def _adjacent_top2(L, s, label, volumes, is_open):
    """Two largest distinct adjacent cluster volumes, literally by sorting."""
    labs = set()
    for nb, _, _ in _site_neighbors(L, s):
        if is_open[nb]:
            labs.add(label[nb])
    vols = sorted((volumes[lab] for lab in labs), reverse=True)
    m1 = vols[0] if vols else 0
    m2 = vols[1] if len(vols) > 1 else 0
    return m1, m2


def naive_run(params: ModelParams, schedule) -> RunRecord:
    """Replay one schedule with full recomputation at every attempt.

    Produces the same observables as the engine; the cost is a fresh BFS of
    all open sites after every successful open, so lattices are capped at
    L = 64.
    """
    L = params.L
    if L > MAX_NAIVE_L:
        raise ValueError(f"oracle runs are limited to L <= {MAX_NAIVE_L}")
    n = L * L
    is_open = [False] * n
    label, volumes, wrapped = [-1] * n, [], False
    first_wrap = None
    opens = 0
    for attempt, s in enumerate(schedule, start=1):
        s = int(s)
        m1, m2 = _adjacent_top2(L, s, label, volumes, is_open)
        if _may_open(m1, m2, params.r, params.mode):
            is_open[s] = True
            opens += 1
            label, volumes, wrapped = _clusters(L, is_open)
            if wrapped and first_wrap is None:
                first_wrap = attempt
    if opens == 0:
        stats = FinalStats(0.0, 0.0, 0)
    else:
        stats = FinalStats(opens / n, max(volumes) / n, len(set(volumes)))
    return RunRecord(first_wrap, opens, stats, params)


def exact_qcurve(
    L: int, r: int, mode: str = "standard"
) -> tuple[WrapCurve, StatsAccumulator]:
    """Exact wrap-probability curve by enumerating every attempt schedule.

    N! schedules are replayed through the naive dynamics, so only L <= 3 is
    allowed (9! = 362880 schedules); terminal statistics come out exact as a
    byproduct.
    """
    if L > MAX_EXACT_L:
        raise ValueError(f"exhaustive enumeration is limited to L <= {MAX_EXACT_L}")
    params = ModelParams(L=L, r=r, mode=mode)
    n = L * L
    counts = np.zeros(n + 1, dtype=np.int64)
    acc = StatsAccumulator(L, r, mode)
    total = 0
    for order in permutations(range(n)):
        rec = naive_run(params, order)
        total += 1
        if rec.first_wrap is not None:
            counts[rec.first_wrap] += 1
        acc.add(
            rec.opens,
            round(rec.final_stats.largest_fraction * n),
            rec.final_stats.distinct_volumes,
            rec.first_wrap is not None,
        )
    return WrapCurve(L, r, mode, total, counts), acc
