"""Ensemble aggregation and analysis.

Runs reduce into two mergeable accumulators: a histogram of first-wrap
attempt indices (the microcanonical wrap-probability curve) and integer sums
of the terminal-state observables.  Both are order-independent, so ensembles
can be split across workers or invocations and merged exactly.

The canonical curve psi(t) follows from the microcanonical one by weighting
entry i with the probability that exactly i attempt times fall below t,
which is Binomial(N, t); weights are computed by a mode-centered
multiplicative recurrence with renormalization, stable for N up to 10**6.
"""

import multiprocessing
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import kernel
from .engine import MODE_OPPOSITE, MODE_STANDARD, run_rng

DEFAULT_GRID = 2001


# ---------------------------------------------------------------------------
# mergeable accumulators


@dataclass
class WrapCurve:
    """Microcanonical wrap probabilities for one (L, r, mode) ensemble.

    `wrap_counts[i]` is the number of runs whose first wrap happened at
    attempt i (index 0 unused); the wrap probability after i attempts is the
    cumulative fraction of runs with first wrap <= i.
    """

    L: int
    r: int
    mode: str
    runs: int
    wrap_counts: np.ndarray  # int64, length N + 1
    seed: int | None = None
    run0: int = 0

    def __post_init__(self):
        self.wrap_counts = np.asarray(self.wrap_counts, dtype=np.int64)
        if self.wrap_counts.shape != (self.N + 1,):
            raise ValueError("wrap_counts must have length N + 1")

    @property
    def N(self) -> int:
        return self.L * self.L

    @property
    def perc_runs(self) -> int:
        return int(self.wrap_counts.sum())

    @property
    def probs(self) -> np.ndarray:
        """Wrap probability after i attempts, i = 0..N (non-decreasing)."""
        return np.cumsum(self.wrap_counts) / self.runs

    def key(self):
        return (self.L, self.r, self.mode)

    def merge(self, other: "WrapCurve") -> "WrapCurve":
        if self.key() != other.key():
            raise ValueError("cannot merge curves with different parameters")
        if self.seed is not None and other.seed is not None and self.seed != other.seed:
            raise ValueError("cannot merge curves from different master seeds")
        return WrapCurve(
            self.L,
            self.r,
            self.mode,
            self.runs + other.runs,
            self.wrap_counts + other.wrap_counts,
            seed=self.seed if self.seed is not None else other.seed,
            run0=min(self.run0, other.run0),
        )


def accumulate(records, L: int, r: int, mode: str = MODE_STANDARD) -> WrapCurve:
    """Fold a stream of run records into a WrapCurve.

    Records carrying parameters are checked against (L, r, mode); a mixed
    stream is rejected.
    """
    counts = np.zeros(L * L + 1, dtype=np.int64)
    runs = 0
    for rec in records:
        p = rec.params
        if p is not None and (p.L, p.r, p.mode) != (L, r, mode):
            raise ValueError(
                f"mixed parameters in accumulation: expected "
                f"(L={L}, r={r}, mode={mode}), got (L={p.L}, r={p.r}, mode={p.mode})"
            )
        runs += 1
        if rec.first_wrap is not None:
            counts[rec.first_wrap] += 1
    return WrapCurve(L, r, mode, runs, counts)


@dataclass
class StatsAccumulator:
    """Exact integer sums of per-run terminal observables.

    Sums of ints commute, so merged partial accumulators are bit-identical
    to a single sequential pass regardless of how runs were partitioned.
    """

    L: int
    r: int
    mode: str
    runs: int = 0
    opens_sum: int = 0
    opens_sq: int = 0
    largest_sum: int = 0
    largest_sq: int = 0
    distinct_sum: int = 0
    distinct_sq: int = 0
    wraps: int = 0

    @property
    def N(self) -> int:
        return self.L * self.L

    def add(self, opens: int, largest: int, distinct: int, wrapped: bool) -> None:
        self.runs += 1
        self.opens_sum += opens
        self.opens_sq += opens * opens
        self.largest_sum += largest
        self.largest_sq += largest * largest
        self.distinct_sum += distinct
        self.distinct_sq += distinct * distinct
        self.wraps += 1 if wrapped else 0

    def add_record(self, rec) -> None:
        n = self.N
        self.add(
            rec.opens,
            round(rec.final_stats.largest_fraction * n),
            rec.final_stats.distinct_volumes,
            rec.first_wrap is not None,
        )

    def merge(self, other: "StatsAccumulator") -> "StatsAccumulator":
        if (self.L, self.r, self.mode) != (other.L, other.r, other.mode):
            raise ValueError("cannot merge stats with different parameters")
        return StatsAccumulator(
            self.L,
            self.r,
            self.mode,
            self.runs + other.runs,
            self.opens_sum + other.opens_sum,
            self.opens_sq + other.opens_sq,
            self.largest_sum + other.largest_sum,
            self.largest_sq + other.largest_sq,
            self.distinct_sum + other.distinct_sum,
            self.distinct_sq + other.distinct_sq,
            self.wraps + other.wraps,
        )

    @staticmethod
    def _mean_std(total, total_sq, runs):
        mean = total / runs
        if runs < 2:
            return mean, 0.0
        var = (total_sq - total * total / runs) / (runs - 1)
        return mean, float(np.sqrt(max(var, 0.0)))

    def summary(self) -> dict:
        """Means and sample standard deviations across runs."""
        if self.runs == 0:
            raise ValueError("empty accumulator")
        n = self.N
        rho_m, rho_s = self._mean_std(self.opens_sum, self.opens_sq, self.runs)
        big_m, big_s = self._mean_std(self.largest_sum, self.largest_sq, self.runs)
        dst_m, dst_s = self._mean_std(self.distinct_sum, self.distinct_sq, self.runs)
        return {
            "L": self.L,
            "r": self.r,
            "mode": self.mode,
            "runs": self.runs,
            "rho_mean": rho_m / n,
            "rho_std": rho_s / n,
            "largest_fraction_mean": big_m / n,
            "largest_fraction_std": big_s / n,
            "distinct_volumes_mean": dst_m,
            "distinct_volumes_std": dst_s,
            "wrap_fraction": self.wraps / self.runs,
        }


# ---------------------------------------------------------------------------
# ensemble execution


def _run_range(L, r, mode, seed, indices):
    """Sweep the given run indices serially; returns mergeable partials."""
    n = L * L
    counts = np.zeros(n + 1, dtype=np.int64)
    acc = StatsAccumulator(L, r, mode)
    opposite = mode == MODE_OPPOSITE
    for idx in indices:
        rng = run_rng(seed, idx)
        order = rng.permutation(n)
        fw, opens, largest, distinct = kernel.sweep(L, r, opposite, order)
        if fw:
            counts[fw] += 1
        acc.add(int(opens), int(largest), int(distinct), fw > 0)
    return counts, acc


def _worker(args):
    return _run_range(*args)


def run_ensemble(
    L: int,
    r: int,
    mode: str = MODE_STANDARD,
    runs: int = 1000,
    seed: int = 0,
    workers: int = 1,
    run0: int = 0,
) -> tuple[WrapCurve, StatsAccumulator]:
    """Monte Carlo ensemble of independent runs.

    Run index idx in [run0, run0 + runs) uses the stream keyed by
    (seed, idx), so results do not depend on the worker count; workers > 1
    stripes run indices across a process pool.
    """
    if runs < 1:
        raise ValueError("runs must be positive")
    kernel.warmup()  # compile before forking
    if workers <= 1:
        counts, acc = _run_range(L, r, mode, seed, range(run0, run0 + runs))
    else:
        jobs = [
            (L, r, mode, seed, range(run0 + w, run0 + runs, workers))
            for w in range(workers)
        ]
        with multiprocessing.Pool(processes=workers) as pool:
            parts = pool.map(_worker, jobs)
        counts = np.zeros(L * L + 1, dtype=np.int64)
        acc = StatsAccumulator(L, r, mode)
        for c, a in parts:
            counts += c
            acc = acc.merge(a)
    curve = WrapCurve(L, r, mode, runs, counts, seed=seed, run0=run0)
    return curve, acc


# ---------------------------------------------------------------------------
# canonical convolution


@njit(cache=True)
def _bernstein_weights(t, n):
    """Binomial(n, t) pmf via a mode-centered recurrence, renormalized.

    Avoids factorials entirely; entries far from the mode underflow to zero,
    which is harmless after renormalization.
    """
    w = np.zeros(n + 1)
    if t <= 0.0:
        w[0] = 1.0
        return w
    if t >= 1.0:
        w[n] = 1.0
        return w
    mode = int(round(t * n))
    if mode > n:
        mode = n
    w[mode] = 1.0
    odds = t / (1.0 - t)
    for i in range(mode + 1, n + 1):
        w[i] = w[i - 1] * ((n - i + 1) / i) * odds
    for i in range(mode - 1, -1, -1):
        w[i] = w[i + 1] * ((i + 1) / (n - i)) / odds
    total = 0.0
    for i in range(n + 1):
        total += w[i]
    for i in range(n + 1):
        w[i] /= total
    return w


@njit(cache=True)
def _bernstein_dot(t, values):
    """Sum of Binomial(n, t) weights times values, n = len(values) - 1."""
    n = values.shape[0] - 1
    if t <= 0.0:
        return values[0]
    if t >= 1.0:
        return values[n]
    w = _bernstein_weights(t, n)
    out = 0.0
    for i in range(n + 1):
        if w[i] != 0.0:
            out += w[i] * values[i]
    return out


def binomial_weights(n: int, t: float) -> np.ndarray:
    """Normalized Binomial(n, t) weights over i = 0..n."""
    return _bernstein_weights(float(t), int(n))


@dataclass
class CanonicalCurve:
    """Wrap probability as a function of attempt time t on a grid."""

    L: int
    r: int
    mode: str
    runs: int
    t: np.ndarray
    prob: np.ndarray
    mean_wrap_time: float | None
    max_slope: float
    max_slope_t: float
    wrap_fraction: float  # probability of wrapping at all by t = 1


def canonical_prob(curve: WrapCurve, t_grid) -> np.ndarray:
    """psi on the grid: binomial mixture of the microcanonical probabilities."""
    q = curve.probs
    return np.array([_bernstein_dot(float(t), q) for t in np.asarray(t_grid)])


def mean_wrap_time(curve: WrapCurve) -> float:
    """Mean attempt time of the first wrap.

    The i-th attempt happens at the i-th order statistic of N uniforms,
    whose mean is i / (N + 1); the result is conditioned on wrapping when
    some runs never wrap.  Raises when no run wraps at all.
    """
    counts = curve.wrap_counts
    total = counts.sum()
    if total == 0:
        raise ValueError("no percolating runs: mean wrap time is undefined")
    i = np.arange(curve.N + 1, dtype=np.int64)
    return float((counts * i).sum() / ((curve.N + 1) * total))


def slope_at(curve: WrapCurve, t: float) -> float:
    """Exact derivative of the canonical wrap probability at t."""
    dq = curve.wrap_counts[1:] / curve.runs
    return curve.N * _bernstein_dot(float(t), dq)


def _golden_max(f, a, b, tol=1e-10):
    """Golden-section maximization of a unimodal function on [a, b]."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = (a + b) / 2.0
    return x, f(x)


def max_slope(curve: WrapCurve, grid_size: int = DEFAULT_GRID) -> tuple[float, float]:
    """Largest derivative of the canonical curve and its location.

    Dense-grid bracketing with golden-section refinement keeps the value
    error far below 0.1 %.  A constant curve has slope 0.
    """
    dq = curve.wrap_counts[1:] / curve.runs
    if not dq.any():
        return 0.0, 0.0
    n = curve.N

    def deriv(t):
        return n * _bernstein_dot(t, dq)

    grid = np.linspace(0.0, 1.0, grid_size)
    values = np.array([deriv(t) for t in grid])
    k = int(np.argmax(values))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, grid_size - 1)]
    t_star, v_star = _golden_max(deriv, lo, hi)
    if values[k] > v_star:
        t_star, v_star = grid[k], values[k]
    return float(v_star), float(t_star)


def convolve(curve: WrapCurve, t_grid=None) -> CanonicalCurve:
    """Full canonical summary of a microcanonical curve."""
    if t_grid is None:
        t_grid = np.linspace(0.0, 1.0, DEFAULT_GRID)
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size and (t_grid.min() < 0.0 or t_grid.max() > 1.0):
        raise ValueError("t grid must lie in [0, 1]")
    prob = canonical_prob(curve, t_grid)
    tbar = mean_wrap_time(curve) if curve.perc_runs > 0 else None
    slope, slope_t = max_slope(curve)
    return CanonicalCurve(
        curve.L,
        curve.r,
        curve.mode,
        curve.runs,
        t_grid,
        prob,
        tbar,
        slope,
        slope_t,
        curve.perc_runs / curve.runs,
    )


# ---------------------------------------------------------------------------
# finite-size scaling fits


@dataclass
class ScalingFit:
    """One finite-size-scaling regression result."""

    estimate: float
    uncertainty: float
    slope: float
    intercept: float
    residual_std: float
    inputs: list = field(default_factory=list)
    fixed_nu: float | None = None


def _check_sizes(sizes):
    if len(sizes) < 3:
        raise ValueError("at least 3 lattice sizes are required")
    if len(set(sizes)) < 2:
        raise ValueError("degenerate fit: all lattice sizes equal")


def _bootstrap_std(x, y, slope, intercept, transform, samples, seed):
    """Residual-bootstrap spread of a derived regression quantity."""
    rng = np.random.default_rng(seed)
    fitted = intercept + slope * x
    resid = y - fitted
    values = []
    for _ in range(samples):
        y_star = fitted + rng.choice(resid, size=resid.size, replace=True)
        b, a = np.polyfit(x, y_star, 1)
        values.append(transform(b, a))
    return float(np.std(values, ddof=1))


def fit_critical_time(points, nu: float, bootstrap: int = 0,
                      bootstrap_seed: int = 0) -> ScalingFit:
    """Critical time from the drift of the mean wrap time with size.

    Ordinary least squares of t_bar(L) against L**(-1/nu); the intercept
    extrapolates to infinite size and the quoted uncertainty is the standard
    deviation of the regression residuals.  `bootstrap` > 0 switches the
    uncertainty to a residual bootstrap with that many resamples.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    points = sorted(points)
    sizes = [p[0] for p in points]
    _check_sizes(sizes)
    x = np.array(sizes, dtype=float) ** (-1.0 / nu)
    y = np.array([p[1] for p in points], dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (intercept + slope * x)
    sigma = float(np.std(resid, ddof=min(2, len(points) - 1)))
    uncertainty = sigma
    if bootstrap > 0:
        uncertainty = _bootstrap_std(x, y, slope, intercept,
                                     lambda b, a: a, bootstrap, bootstrap_seed)
    return ScalingFit(
        estimate=float(intercept),
        uncertainty=uncertainty,
        slope=float(slope),
        intercept=float(intercept),
        residual_std=sigma,
        inputs=points,
        fixed_nu=nu,
    )


def fit_nu(points, bootstrap: int = 0, bootstrap_seed: int = 0) -> ScalingFit:
    """Correlation-length exponent from the growth of the maximum slope.

    The log-log regression of max slope against L has slope 1/nu; the
    uncertainty propagates the OLS slope standard error (computed from the
    residual standard deviation) through nu = 1/slope, or comes from a
    residual bootstrap when `bootstrap` > 0.
    """
    points = sorted(points)
    sizes = [p[0] for p in points]
    _check_sizes(sizes)
    if any(p[1] <= 0 for p in points):
        raise ValueError("max slopes must be positive for the log-log fit")
    x = np.log(np.array(sizes, dtype=float))
    y = np.log(np.array([p[1] for p in points], dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (intercept + slope * x)
    sigma = float(np.std(resid, ddof=min(2, len(points) - 1)))
    sxx = float(np.sum((x - x.mean()) ** 2))
    nu = 1.0 / float(slope)
    uncertainty = float(sigma / np.sqrt(sxx) * nu * nu)
    if bootstrap > 0:
        uncertainty = _bootstrap_std(x, y, slope, intercept,
                                     lambda b, a: 1.0 / b, bootstrap,
                                     bootstrap_seed)
    return ScalingFit(
        estimate=nu,
        uncertainty=uncertainty,
        slope=float(slope),
        intercept=float(intercept),
        residual_std=sigma,
        inputs=points,
    )
