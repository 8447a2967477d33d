import numpy as np
import pytest

from vdperc.engine import MODE_OPPOSITE, ModelParams, run_rng, run_sweep
from vdperc.oracle import exact_qcurve, naive_run


def arm_schedule(L, center, lengths):
    """Schedule prefix growing straight arms toward a center site.

    Arms only ever touch their own previous site while growing, so every
    buildup attempt sees a single adjacent cluster and opens at any r.
    """
    cx, cy = center
    directions = [(1, 0), (-1, 0), (0, 1), (0, -1)]
    sites = []
    for (dx, dy), length in zip(directions, lengths):
        for k in range(1, length + 1):
            sites.append(((cx + k * dx) % L) + ((cy + k * dy) % L) * L)
    return sites, cx + cy * L


def test_figure_configuration_gate():
    # arms of 12, 9, 9 around the target: difference 3, so r=3 opens it
    # and r=4 does not
    L = 30
    prefix, s = arm_schedule(L, (6, 6), (12, 9, 9))
    for r, extra in ((3, 1), (4, 0)):
        rec = naive_run(ModelParams(L=L, r=r), prefix + [s])
        assert rec.opens == len(prefix) + extra


def test_full_occupation_at_r0():
    params = ModelParams(L=3, r=0)
    for seed in range(5):
        sched = run_rng(1, seed).permutation(9)
        rec = naive_run(params, sched)
        assert rec.opens == 9
        assert rec.final_stats.rho == 1.0
        assert rec.first_wrap is not None


@pytest.mark.parametrize("mode", ["standard", MODE_OPPOSITE])
@pytest.mark.parametrize("L", [2, 3, 5, 8])
def test_engine_oracle_equivalence(L, mode):
    for r in (0, 1, 2, 5):
        for run in range(8):
            params = ModelParams(L=L, r=r, mode=mode, seed=3)
            sched = run_rng(3, run).permutation(L * L)
            assert run_sweep(params, schedule=sched) == naive_run(params, sched)


def test_first_wrap_index_L8():
    # wrap indices specifically, against the displacement-label BFS
    for run in range(30):
        params = ModelParams(L=8, r=2, seed=8)
        sched = run_rng(8, run).permutation(64)
        assert run_sweep(params, schedule=sched).first_wrap == \
            naive_run(params, sched).first_wrap


def test_exact_L2_hand_derived():
    # on the 2-torus any two adjacent opens already wrap; the first two
    # sites are adjacent in 2/3 of schedules, and a third site always closes
    # a ring, so the curve is (0, 0, 2/3, 1, 1) for r = 0
    curve, acc = exact_qcurve(2, 0)
    assert curve.runs == 24
    assert curve.probs.tolist() == [0.0, 0.0, 2 / 3, 1.0, 1.0]
    s = acc.summary()
    assert s["rho_mean"] == 1.0
    assert s["largest_fraction_mean"] == 1.0
    assert s["distinct_volumes_mean"] == 1.0


def test_exact_L2_r1():
    # r = 1 on the 2-torus: an adjacent first pair (16/24 schedules) wraps at
    # attempt 2 and fills the lattice; a diagonal first pair leaves two equal
    # singletons that block both remaining sites forever
    curve, acc = exact_qcurve(2, 1)
    assert curve.probs.tolist() == [0.0, 0.0, 2 / 3, 2 / 3, 2 / 3]
    s = acc.summary()
    assert s["rho_mean"] == pytest.approx(5 / 6, abs=1e-15)
    # diagonal-first runs end as two singletons: largest fraction 1/4 there
    assert s["largest_fraction_mean"] == pytest.approx(3 / 4, abs=1e-15)
    assert s["distinct_volumes_mean"] == 1.0
    assert s["wrap_fraction"] == pytest.approx(2 / 3, abs=1e-15)


def test_exact_size_guard():
    with pytest.raises(ValueError):
        exact_qcurve(4, 0)


def test_naive_size_guard():
    params = ModelParams(L=128, r=0)
    with pytest.raises(ValueError):
        naive_run(params, np.arange(128 * 128))
