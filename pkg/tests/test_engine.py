import numpy as np
import pytest

from vdperc.engine import (
    MODE_OPPOSITE,
    MODE_STANDARD,
    FinalStats,
    ModelParams,
    adjacent_top2,
    attempt_open,
    attempt_schedule,
    final_stats,
    run_rng,
    run_sweep,
)
from vdperc.forest import ClusterForest
from vdperc.lattice import LatticeGeometry


def grow_arm(forest, sites):
    """Open a path of sites one by one; each touches only the previous one,
    so the single-cluster rule admits it under any constraint."""
    params = ModelParams(L=forest.geometry.L, r=10 ** 6)
    for s in sites:
        opened, _ = attempt_open(forest, s, params)
        assert opened, f"arm site {s} unexpectedly blocked"


def figure_arms(L=30, center=(6, 6)):
    """Three straight arms of volumes 12, 9, 9 meeting the center site."""
    geom = LatticeGeometry(L)
    cx, cy = center
    right = [geom.site_id(cx + k, cy) for k in range(1, 13)]
    left = [geom.site_id(cx - k, cy) for k in range(1, 10)]
    top = [geom.site_id(cx, cy + k) for k in range(1, 10)]
    return geom, geom.site_id(cx, cy), (right, left, top)


def test_adjacent_top2_two_largest_distinct():
    geom, s, arms = figure_arms()
    forest = ClusterForest(geom)
    for arm in arms:
        grow_arm(forest, arm)
    assert adjacent_top2(forest, s) == (12, 9)


def test_adjacent_top2_all_closed():
    forest = ClusterForest(LatticeGeometry(5))
    assert adjacent_top2(forest, 12) == (0, 0)


def test_adjacent_top2_same_cluster_counted_once():
    # one cluster of volume 5 touching s through two different neighbors
    geom = LatticeGeometry(12)
    forest = ClusterForest(geom)
    s = geom.site_id(6, 6)
    hook = [
        geom.site_id(5, 6),
        geom.site_id(5, 7),
        geom.site_id(6, 7),
        geom.site_id(5, 8),
        geom.site_id(5, 9),
    ]
    grow_arm(forest, hook)
    assert adjacent_top2(forest, s) == (5, 0)


@pytest.mark.parametrize("r,expect_open", [(3, True), (4, False)])
def test_volume_difference_gate(r, expect_open):
    # difference 12 - 9 = 3 admits the site exactly when r <= 3
    geom, s, arms = figure_arms()
    forest = ClusterForest(geom)
    for arm in arms:
        grow_arm(forest, arm)
    opened, _ = attempt_open(forest, s, ModelParams(L=geom.L, r=r))
    assert opened is expect_open


def test_r0_always_opens():
    geom, s, arms = figure_arms()
    forest = ClusterForest(geom)
    for arm in arms:
        grow_arm(forest, arm)
    opened, _ = attempt_open(forest, s, ModelParams(L=geom.L, r=0))
    assert opened


def test_equal_volumes_blocked_standard_opened_opposite():
    def build():
        geom = LatticeGeometry(20)
        forest = ClusterForest(geom)
        s = geom.site_id(8, 8)
        grow_arm(forest, [geom.site_id(8 + k, 8) for k in range(1, 6)])
        grow_arm(forest, [geom.site_id(8 - k, 8) for k in range(1, 6)])
        assert adjacent_top2(forest, s) == (5, 5)
        return forest, s, geom.L

    forest, s, L = build()
    opened, _ = attempt_open(forest, s, ModelParams(L=L, r=1))
    assert not opened
    forest, s, L = build()
    opened, _ = attempt_open(forest, s, ModelParams(L=L, r=1, mode=MODE_OPPOSITE))
    assert opened


def test_blocked_site_is_permanent_and_not_reattemptable():
    geom, s, arms = figure_arms()
    forest = ClusterForest(geom)
    for arm in arms:
        grow_arm(forest, arm)
    params = ModelParams(L=geom.L, r=4)
    opened, _ = attempt_open(forest, s, params)
    assert not opened
    with pytest.raises(ValueError):
        attempt_open(forest, s, params)


def test_r0_run_fills_lattice():
    params = ModelParams(L=8, r=0, seed=123)
    rec = run_sweep(params)
    assert rec.opens == 64
    assert rec.final_stats == FinalStats(1.0, 1.0, 1)
    assert rec.first_wrap is not None


def test_final_stats_arithmetic():
    # clusters {3, 3, 2}: rho = opens/N, largest = max/N, distinct volume values
    # (separated clusters of these volumes need L >= 6; they cannot coexist
    # with a moat on the 4-torus)
    geom = LatticeGeometry(6)
    forest = ClusterForest(geom)
    grow_arm(forest, [geom.site_id(x, 0) for x in (0, 1, 2)])
    grow_arm(forest, [geom.site_id(x, 2) for x in (2, 3, 4)])
    grow_arm(forest, [geom.site_id(x, 4) for x in (4, 5)])
    stats = final_stats(forest)
    assert stats == FinalStats(8 / 36, 3 / 36, 2)


def test_final_stats_empty_forest():
    forest = ClusterForest(LatticeGeometry(4))
    assert final_stats(forest) == FinalStats(0.0, 0.0, 0)


def test_schedule_is_uniform_permutation():
    rng = run_rng(0, 0)
    order = attempt_schedule(25, rng)
    assert sorted(order.tolist()) == list(range(25))


def test_run_depends_only_on_schedule():
    params = ModelParams(L=6, r=1, seed=5)
    sched = run_rng(5, 0).permutation(36)
    a = run_sweep(params, schedule=sched)
    b = run_sweep(params, schedule=sched.copy())
    assert a == b


def test_run_rng_streams_reproducible_and_distinct():
    a = run_rng(9, 4).permutation(30)
    b = run_rng(9, 4).permutation(30)
    c = run_rng(9, 5).permutation(30)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize("mode", [MODE_STANDARD, MODE_OPPOSITE])
@pytest.mark.parametrize("L", [2, 3, 5, 8, 16])
def test_kernel_matches_object_path(L, mode):
    for r in (0, 1, 2, 5):
        for run in range(3):
            params = ModelParams(L=L, r=r, mode=mode, seed=77)
            sched = run_rng(77, run).permutation(L * L)
            fast = run_sweep(params, schedule=sched, use_kernel=True)
            slow = run_sweep(params, schedule=sched, use_kernel=False)
            assert fast == slow


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(L=8, r=-1)
    with pytest.raises(ValueError):
        ModelParams(L=8, r=1, mode="sideways")
    with pytest.raises(ValueError):
        ModelParams(L=1, r=0)
