"""Single-run dynamics: the volume-difference opening rule along a schedule.

A run draws a uniform random permutation of all sites and attempts to open
them in that order.  A site opens when the volumes of the two largest
distinct clusters adjacent to it differ by at least r (standard mode) or by
less than r (opposite mode), or when at most one cluster touches it; a
rejected site is closed permanently.  The run always continues to the end of
the schedule so the final state is the full-time (t = 1) configuration.

Attempt times are never materialized: only their ordering matters, and the
order statistics of i.i.d. uniforms are exactly a uniform permutation.
"""

from dataclasses import dataclass

import numpy as np

from . import kernel
from .forest import CLOSED_UNTRIED, OPEN, ClusterForest, WrapEvent
from .lattice import LatticeGeometry, neighbors

MODE_STANDARD = "standard"
MODE_OPPOSITE = "opposite"
MODES = (MODE_STANDARD, MODE_OPPOSITE)


@dataclass(frozen=True)
class ModelParams:
    """Lattice size, constraint and mode for one run or ensemble."""

    L: int
    r: int
    mode: str = MODE_STANDARD
    seed: int = 0

    def __post_init__(self):
        if self.r < 0:
            raise ValueError(f"constraint r must be non-negative, got {self.r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        LatticeGeometry(self.L)

    @property
    def geometry(self) -> LatticeGeometry:
        return LatticeGeometry(self.L)

    @property
    def N(self) -> int:
        return self.L * self.L


@dataclass(frozen=True)
class FinalStats:
    """Terminal-state observables of one run."""

    rho: float  # open-site density
    largest_fraction: float  # largest cluster volume / N (fraction, not %)
    distinct_volumes: int  # number of distinct cluster volume values


@dataclass(frozen=True)
class RunRecord:
    first_wrap: int | None  # 1-based attempt index; None if no wrap by t = 1
    opens: int
    final_stats: FinalStats
    params: ModelParams | None = None


def run_rng(master_seed: int, run_index: int) -> np.random.Generator:
    """Counter-based per-run stream: (master seed, run index) -> generator.

    Streams are independent of scheduling, so an ensemble split across any
    number of workers reproduces the single-worker results exactly.
    """
    key = np.array([master_seed, run_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def attempt_schedule(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random permutation of n sites (Fisher-Yates)."""
    return rng.permutation(n)


def adjacent_top2(forest: ClusterForest, s: int) -> tuple[int, int]:
    """Volumes of the two largest distinct clusters among the neighbors of s.

    Closed neighbors contribute 0, the same cluster reached through several
    neighbors is counted once, and fewer than two distinct clusters leaves
    the second volume at 0.
    """
    seen = []
    vols = []
    for nb, _ in neighbors(forest.geometry, s):
        if forest.state[nb] == OPEN:
            root, _ = forest.find(nb)
            if root not in seen:
                seen.append(root)
                vols.append(int(forest.volume[root]))
    vols.sort(reverse=True)
    m1 = vols[0] if vols else 0
    m2 = vols[1] if len(vols) > 1 else 0
    return m1, m2


def open_allowed(m1: int, m2: int, r: int, mode: str) -> bool:
    """The opening rule on the two largest distinct adjacent volumes."""
    if m2 == 0:
        return True
    if mode == MODE_OPPOSITE:
        return (m1 - m2) < r
    return (m1 - m2) >= r


def attempt_open(
    forest: ClusterForest, s: int, params: ModelParams, attempt_index: int = 0
) -> tuple[bool, tuple[WrapEvent, ...]]:
    """Attempt to open closed-untried site s under the model rule.

    On success the site is unioned with every open neighbor (one union per
    bond, so L = 2 double bonds count twice) and any newly detected windings
    are returned as WrapEvents, at most one per direction.  On rejection the
    site becomes closed-tried forever.
    """
    if forest.state[s] != CLOSED_UNTRIED:
        raise ValueError(f"site {s} was already attempted")
    m1, m2 = adjacent_top2(forest, s)
    if not open_allowed(m1, m2, params.r, params.mode):
        forest.mark_tried(s)
        return False, ()
    forest.open_site(s)
    events = []
    seen = set()
    for nb, disp in neighbors(forest.geometry, s):
        if forest.state[nb] == OPEN and nb != s:
            result, wraps = forest.union(s, nb, disp)
            if result == "same":
                for direction in wraps:
                    if direction not in seen:
                        seen.add(direction)
                        events.append(WrapEvent(direction, attempt_index))
    return True, tuple(events)


def final_stats(forest: ClusterForest) -> FinalStats:
    """Density, largest-cluster fraction and distinct volume count."""
    vols = list(forest.root_volumes().values())
    n = forest.geometry.N
    if not vols:
        return FinalStats(0.0, 0.0, 0)
    return FinalStats(forest.opens / n, max(vols) / n, len(set(vols)))


def run_sweep(
    params: ModelParams,
    rng: np.random.Generator | None = None,
    schedule=None,
    use_kernel: bool = True,
) -> RunRecord:
    """Execute one full run and return its record.

    The sampled schedule comes from `rng` (or from params.seed when no
    generator is given).  An explicit `schedule` overrides sampling; tests
    may pass a prefix of a permutation to probe intermediate configurations.
    """
    if schedule is None:
        if rng is None:
            rng = run_rng(params.seed, 0)
        schedule = attempt_schedule(params.N, rng)
    schedule = np.asarray(schedule, dtype=np.int64)
    if use_kernel and len(schedule) == params.N:
        fw, opens, largest, distinct = kernel.sweep(
            params.L, params.r, params.mode == MODE_OPPOSITE, schedule
        )
        fw, opens, largest, distinct = int(fw), int(opens), int(largest), int(distinct)
        n = params.N
        stats = FinalStats(opens / n, largest / n, distinct)
        return RunRecord(fw if fw else None, opens, stats, params)

    forest = ClusterForest(params.geometry)
    first = None
    for i, s in enumerate(schedule, start=1):
        _, events = attempt_open(forest, int(s), params, attempt_index=i)
        if first is None and events:
            first = events[0].attempt_index
    return RunRecord(first, forest.opens, final_stats(forest), params)
