"""Command-line driver.

Subcommands:
  sweep         run ensembles and persist wrap curves + final-state statistics
  analyze       canonical curves, scaling fits and plot-ready tables
  stats         final-state statistics report across constraints
  oracle-check  engine vs reference-dynamics verification

Exit codes: 0 success, 1 usage error, 2 validation or verification failure.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .engine import MODES, MODE_STANDARD, ModelParams, run_rng, run_sweep
from .ensemble import (
    DEFAULT_GRID,
    convolve,
    fit_critical_time,
    fit_nu,
    run_ensemble,
)
from .oracle import MAX_EXACT_L, exact_qcurve, naive_run
from .storage import (
    fit_as_dict,
    read_wrap_curve,
    write_columns,
    write_json,
    write_keyvalue,
    write_stats,
    write_wrap_curve,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAIL = 2

DEFAULT_NU = 4.0 / 3.0


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; this tool reserves 2 for
    # validation failures and uses 1 for usage problems
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _add_common(p):
    p.add_argument("--L", action="append", type=int, required=True,
                   help="lattice side length (repeatable)")
    p.add_argument("--r", action="append", type=int, required=True,
                   help="volume-difference constraint (repeatable)")
    p.add_argument("--mode", choices=MODES, default=MODE_STANDARD)
    p.add_argument("--runs", type=int, default=1000, help="runs per (L, r)")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vdperc", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run ensembles and persist the results")
    _add_common(p)
    p.add_argument("--run-offset", type=int, default=0,
                   help="first run index (for splitting a sweep across jobs)")

    p = sub.add_parser("analyze", help="canonical curves and scaling fits")
    p.add_argument("curves", nargs="+", type=Path,
                   help="wrap-curve files sharing one (r, mode)")
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--t-grid", type=int, default=DEFAULT_GRID,
                   help="number of grid points for the canonical curves")
    p.add_argument("--nu-fixed", type=float, default=DEFAULT_NU,
                   help="exponent used in the critical-time fit")

    p = sub.add_parser("stats", help="final-state statistics across constraints")
    _add_common(p)

    p = sub.add_parser("oracle-check", help="engine vs reference verification")
    p.add_argument("--L", action="append", type=int, default=None)
    p.add_argument("--r", action="append", type=int, default=None)
    p.add_argument("--mode", choices=MODES, default=MODE_STANDARD)
    p.add_argument("--seeds", type=int, default=20, help="seeds per (L, r)")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--exhaustive-L", action="append", type=int, default=None,
                   help=f"lattice sides (<= {MAX_EXACT_L}) for exhaustive checks")
    p.add_argument("--mc-runs", type=int, default=20000,
                   help="Monte Carlo runs per exhaustive comparison")
    p.add_argument("--qcurve", action="append", type=Path, default=None,
                   help="wrap-curve file to validate against exact enumeration")
    return parser


def _curve_name(L, r, mode):
    return f"qcurve_L{L}_r{r}_{mode}.dat"


def cmd_sweep(args) -> int:
    args.out.mkdir(parents=True, exist_ok=True)
    for L in args.L:
        for r in args.r:
            curve, acc = run_ensemble(
                L, r, args.mode, runs=args.runs, seed=args.seed,
                workers=args.workers, run0=args.run_offset,
            )
            write_wrap_curve(args.out / _curve_name(L, r, args.mode), curve)
            write_stats(args.out / f"stats_L{L}_r{r}_{args.mode}", acc,
                        seed=args.seed)
            print(f"sweep L={L} r={r} mode={args.mode}: "
                  f"{curve.perc_runs}/{curve.runs} runs wrapped",
                  file=sys.stderr)
    return EXIT_OK


def cmd_analyze(args) -> int:
    curves = {}
    for path in args.curves:
        curve = read_wrap_curve(path)
        key = (curve.r, curve.mode)
        if curves and key not in curves:
            print(f"error: inconsistent (r, mode) across inputs: {path}",
                  file=sys.stderr)
            return EXIT_FAIL
        by_L = curves.setdefault(key, {})
        by_L[curve.L] = by_L[curve.L].merge(curve) if curve.L in by_L else curve
    (r, mode), by_L = next(iter(curves.items()))
    if len(by_L) < 3:
        print(f"error: fits need >= 3 lattice sizes, got {sorted(by_L)}",
              file=sys.stderr)
        return EXIT_FAIL

    args.out.mkdir(parents=True, exist_ok=True)
    t_grid = np.linspace(0.0, 1.0, args.t_grid)
    tbar_points = []
    slope_points = []
    wrap_fractions = {}
    for L in sorted(by_L):
        canon = convolve(by_L[L], t_grid)
        write_columns(args.out / f"psi_L{L}_r{r}_{mode}.dat",
                      f"L={L} r={r} mode={mode}  columns: t psi",
                      (canon.t, canon.prob))
        wrap_fractions[L] = canon.wrap_fraction
        if canon.mean_wrap_time is None:
            print(f"error: no percolating runs at L={L}; "
                  "mean wrap time undefined", file=sys.stderr)
            return EXIT_FAIL
        tbar_points.append((L, canon.mean_wrap_time))
        slope_points.append((L, canon.max_slope))
        print(f"analyze L={L}: tbar={canon.mean_wrap_time:.6f} "
              f"max_slope={canon.max_slope:.4f} "
              f"wrap_fraction={canon.wrap_fraction:.4f}", file=sys.stderr)

    tc_fit = fit_critical_time(tbar_points, nu=args.nu_fixed)
    nu_fit = fit_nu(slope_points)

    sizes = [L for L, _ in tbar_points]
    write_columns(args.out / f"tbar_r{r}_{mode}.dat",
                  f"r={r} mode={mode} nu={args.nu_fixed}  columns: L Linv_nu tbar",
                  (sizes, [L ** (-1.0 / args.nu_fixed) for L in sizes],
                   [v for _, v in tbar_points]))
    write_columns(args.out / f"maxslope_r{r}_{mode}.dat",
                  f"r={r} mode={mode}  columns: L max_slope log_L log_max_slope",
                  (sizes, [v for _, v in slope_points],
                   [np.log(L) for L in sizes],
                   [np.log(v) for _, v in slope_points]))

    summary = {
        "r": r,
        "mode": mode,
        "nu_fixed": args.nu_fixed,
        "tc_estimate": tc_fit.estimate,
        "tc_uncertainty": tc_fit.uncertainty,
        "nu_estimate": nu_fit.estimate,
        "nu_uncertainty": nu_fit.uncertainty,
        "sizes": sizes,
        "wrap_fractions": [wrap_fractions[L] for L in sizes],
    }
    write_keyvalue(args.out / f"summary_r{r}_{mode}.txt", summary)
    write_json(args.out / f"summary_r{r}_{mode}.json",
               {**summary, "tc_fit": fit_as_dict(tc_fit),
                "nu_fit": fit_as_dict(nu_fit)})
    print(f"r={r} mode={mode}: tc={tc_fit.estimate:.6f} "
          f"(+-{tc_fit.uncertainty:.2g})  nu={nu_fit.estimate:.4f} "
          f"(+-{nu_fit.uncertainty:.2g})")
    return EXIT_OK


def cmd_stats(args) -> int:
    args.out.mkdir(parents=True, exist_ok=True)
    rows = []
    for L in args.L:
        for r in args.r:
            _, acc = run_ensemble(L, r, args.mode, runs=args.runs,
                                  seed=args.seed, workers=args.workers)
            write_stats(args.out / f"stats_L{L}_r{r}_{args.mode}", acc,
                        seed=args.seed)
            rows.append(acc.summary())
    header = (f"{'L':>5} {'r':>3} {'rho_mean':>10} {'rho_std':>9} "
              f"{'largest_%':>10} {'largest_%_std':>13} "
              f"{'distinct':>9} {'distinct_std':>12} {'wrap_frac':>9}")
    print(header)
    for row in rows:
        print(f"{row['L']:>5} {row['r']:>3} {row['rho_mean']:>10.4f} "
              f"{row['rho_std']:>9.4f} {100 * row['largest_fraction_mean']:>10.3f} "
              f"{100 * row['largest_fraction_std']:>13.3f} "
              f"{row['distinct_volumes_mean']:>9.2f} "
              f"{row['distinct_volumes_std']:>12.2f} "
              f"{row['wrap_fraction']:>9.4f}")
    write_json(args.out / f"stats_summary_{args.mode}.json", rows)
    return EXIT_OK


def _check_equivalence(sizes, constraints, mode, seeds, master_seed):
    failures = []
    for L in sizes:
        for r in constraints:
            for run_idx in range(seeds):
                params = ModelParams(L=L, r=r, mode=mode, seed=master_seed)
                rng = run_rng(master_seed, run_idx)
                schedule = rng.permutation(L * L)
                fast = run_sweep(params, schedule=schedule)
                slow = naive_run(params, schedule)
                if fast != slow:
                    failures.append(
                        f"L={L} r={r} run={run_idx}: engine={fast} oracle={slow}"
                    )
    return failures


def _check_exhaustive(L, r, mode, mc_runs, master_seed):
    exact, _ = exact_qcurve(L, r, mode)
    mc, _ = run_ensemble(L, r, mode, runs=mc_runs, seed=master_seed)
    p = exact.probs
    q = mc.probs
    sigma = np.sqrt(p * (1 - p) / mc_runs)
    failures = []
    for i in range(L * L + 1):
        if sigma[i] == 0.0:
            bad = q[i] != p[i]
        else:
            bad = abs(q[i] - p[i]) > 4.0 * sigma[i]
        if bad:
            failures.append(
                f"L={L} r={r} i={i}: exact={p[i]:.6f} mc={q[i]:.6f} "
                f"band=4x{sigma[i]:.6f}"
            )
    return failures


def _check_qcurve_file(path):
    curve = read_wrap_curve(path)
    if curve.L > MAX_EXACT_L:
        return [f"{path}: exhaustive validation needs L <= {MAX_EXACT_L}"]
    exact, _ = exact_qcurve(curve.L, curve.r, curve.mode)
    p = exact.probs
    q = curve.probs
    sigma = np.sqrt(p * (1 - p) / curve.runs)
    failures = []
    for i in range(curve.N + 1):
        bad = q[i] != p[i] if sigma[i] == 0.0 else abs(q[i] - p[i]) > 4.0 * sigma[i]
        if bad:
            failures.append(
                f"{path}: mismatch at i={i}: exact={p[i]:.6f} got={q[i]:.6f}"
            )
    return failures


def cmd_oracle_check(args) -> int:
    sizes = args.L or [2, 3, 8]
    constraints = args.r or [0, 1, 2, 5]
    exhaustive = args.exhaustive_L if args.exhaustive_L is not None else [2]
    failures = []

    failures += _check_equivalence(sizes, constraints, args.mode,
                                   args.seeds, args.seed)
    print(f"equivalence: {len(sizes) * len(constraints) * args.seeds} runs, "
          f"{len(failures)} mismatches", file=sys.stderr)

    for L in exhaustive:
        if L > MAX_EXACT_L:
            print(f"error: exhaustive check limited to L <= {MAX_EXACT_L}",
                  file=sys.stderr)
            return EXIT_FAIL
        for r in constraints:
            found = _check_exhaustive(L, r, args.mode, args.mc_runs, args.seed)
            failures += found
            print(f"exhaustive L={L} r={r}: {len(found)} band violations",
                  file=sys.stderr)

    for path in args.qcurve or []:
        found = _check_qcurve_file(path)
        failures += found
        print(f"qcurve {path}: {len(found)} mismatches", file=sys.stderr)

    if failures:
        print("ORACLE CHECK FAILED")
        for line in failures[:20]:
            print(f"  {line}")
        if len(failures) > 20:
            print(f"  ... and {len(failures) - 20} more")
        return EXIT_FAIL
    print("ORACLE CHECK PASSED")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "sweep":
            return cmd_sweep(args)
        if args.command == "analyze":
            return cmd_analyze(args)
        if args.command == "stats":
            return cmd_stats(args)
        if args.command == "oracle-check":
            return cmd_oracle_check(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
