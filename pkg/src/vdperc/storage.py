"""On-disk formats.

Wrap curves are self-describing text: `key=value` header lines followed by
one `i  prob` pair per line.  Statistics and fit reports are written twice,
as flat key=value text and as JSON; figure data is plain columnar text.
All floats are written with full round-trip precision so probabilities map
back to exact run counts.
"""

import json
from pathlib import Path

import numpy as np

from .ensemble import ScalingFit, StatsAccumulator, WrapCurve


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_wrap_curve(path, curve: WrapCurve) -> None:
    path = Path(path)
    lines = ["# wrap-probability curve"]
    lines.append(f"L={curve.L}")
    lines.append(f"r={curve.r}")
    lines.append(f"mode={curve.mode}")
    lines.append(f"runs={curve.runs}")
    lines.append(f"seed={'' if curve.seed is None else curve.seed}")
    lines.append(f"run0={curve.run0}")
    lines.append("# i  wrap_prob")
    probs = curve.probs
    for i in range(curve.N + 1):
        lines.append(f"{i} {_fmt(probs[i])}")
    path.write_text("\n".join(lines) + "\n")


def read_wrap_curve(path) -> WrapCurve:
    path = Path(path)
    header = {}
    probs = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" in line and not line.split("=", 1)[0].strip().isdigit():
            key, value = line.split("=", 1)
            header[key.strip()] = value.strip()
        else:
            i_str, q_str = line.split()
            probs.append((int(i_str), float(q_str)))
    for key in ("L", "r", "mode", "runs"):
        if key not in header:
            raise ValueError(f"{path}: missing header key {key!r}")
    L = int(header["L"])
    r = int(header["r"])
    runs = int(header["runs"])
    seed = int(header["seed"]) if header.get("seed") else None
    run0 = int(header.get("run0", 0))
    n = L * L
    q = np.zeros(n + 1)
    for i, value in probs:
        if not 0 <= i <= n:
            raise ValueError(f"{path}: index {i} out of range")
        q[i] = value
    if len(probs) != n + 1:
        raise ValueError(f"{path}: expected {n + 1} data lines, got {len(probs)}")
    # probabilities are multiples of 1/runs: recover the exact counts
    cum = np.rint(q * runs).astype(np.int64)
    counts = np.diff(cum, prepend=0)
    if (counts < 0).any():
        raise ValueError(f"{path}: wrap probabilities are not non-decreasing")
    return WrapCurve(L, r, header["mode"], runs, counts, seed=seed, run0=run0)


def write_keyvalue(path, data: dict) -> None:
    path = Path(path)
    lines = [f"{key}={_fmt(value)}" for key, value in data.items()]
    path.write_text("\n".join(lines) + "\n")


def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def write_stats(base_path, acc: StatsAccumulator, seed=None) -> None:
    """Statistics report for one ensemble as .txt and .json."""
    data = acc.summary()
    if seed is not None:
        data["seed"] = seed
    data["largest_percent_mean"] = 100.0 * data["largest_fraction_mean"]
    data["largest_percent_std"] = 100.0 * data["largest_fraction_std"]
    base = Path(base_path)
    write_keyvalue(base.with_suffix(".txt"), data)
    write_json(base.with_suffix(".json"), data)


def write_columns(path, header: str, columns) -> None:
    """Plot-ready whitespace-separated columns with a comment header."""
    rows = zip(*columns)
    lines = [f"# {header}"]
    for row in rows:
        lines.append(" ".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def fit_as_dict(fit: ScalingFit) -> dict:
    data = {
        "estimate": fit.estimate,
        "uncertainty": fit.uncertainty,
        "slope": fit.slope,
        "intercept": fit.intercept,
        "residual_std": fit.residual_std,
        "inputs": [[int(L), float(v)] for L, v in fit.inputs],
    }
    if fit.fixed_nu is not None:
        data["fixed_nu"] = fit.fixed_nu
    return data
