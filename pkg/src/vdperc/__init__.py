"""Monte Carlo engine and analysis tools for volume-difference constrained
site percolation on the periodic square lattice."""

from .engine import (
    MODE_OPPOSITE,
    MODE_STANDARD,
    FinalStats,
    ModelParams,
    RunRecord,
    adjacent_top2,
    attempt_open,
    attempt_schedule,
    final_stats,
    run_rng,
    run_sweep,
)
from .ensemble import (
    CanonicalCurve,
    ScalingFit,
    StatsAccumulator,
    WrapCurve,
    accumulate,
    binomial_weights,
    canonical_prob,
    convolve,
    fit_critical_time,
    fit_nu,
    max_slope,
    mean_wrap_time,
    run_ensemble,
    slope_at,
)
from .forest import ClusterForest, WrapEvent
from .lattice import LatticeGeometry, neighbors
from .oracle import exact_qcurve, naive_run

__version__ = "0.1.0"
