"""Forecast and population ingestion, synthetic populations, plan export."""

from __future__ import annotations

import csv
import json
from datetime import datetime
from pathlib import Path

import numpy as np

from .model import ForecastSeries, Plan, Population, TclParams, ValidationError

MAX_STEP = 3600.0

DEFAULT_RANGES = {
    "alpha": (4.0e-3, 4.5e-3),
    "beta": (8.4e-3, 8.6e-3),
    "delta": (0.1, 1.1),
    "setpoint": (18.5, 22.0),
}
DEFAULT_POWER = 14.0
DEFAULT_EFFICIENCY = 2.5


class InputError(ValueError):
    """Malformed input file."""


def _load_series(path, value_column: str, kind: str) -> tuple[ForecastSeries, datetime]:
    path = Path(path)
    if not path.exists():
        raise InputError(f"{path}: no such file")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise InputError(f"{path}: empty file")
    header = [c.strip() for c in rows[0]]
    if len(header) != 2 or header[0] != "start_time_iso8601" or header[1] != value_column:
        raise InputError(f"{path}: header must be 'start_time_iso8601,{value_column}'")
    stamps, values = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise InputError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
        try:
            stamps.append(datetime.fromisoformat(row[0].strip()))
            values.append(float(row[1]))
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from None
    if not stamps:
        raise InputError(f"{path}: no data rows")
    if kind == "price":
        for lineno, v in enumerate(values, start=2):
            if not v > 0:
                raise InputError(f"{path}:{lineno}: price must be strictly positive, got {v}")
    try:
        offsets = np.array([(s - stamps[0]).total_seconds() for s in stamps])
    except TypeError:
        raise InputError(f"{path}: mixed timezone-aware and naive timestamps") from None
    steps = np.diff(offsets)
    if np.any(steps <= 0):
        raise InputError(f"{path}: timestamps must be strictly increasing (no duplicates)")
    if np.any(steps > MAX_STEP + 1e-9):
        bad = int(np.argmax(steps > MAX_STEP + 1e-9)) + 3
        raise InputError(f"{path}:{bad}: gap in the series; rows must be hourly or finer")
    last = steps[-1] if steps.size else MAX_STEP
    breakpoints = np.append(offsets, offsets[-1] + last)
    if not np.all(np.isfinite(values)):
        raise InputError(f"{path}: non-finite value")
    return ForecastSeries(breakpoints, values, kind=kind), stamps[0]


def load_price_csv(path) -> ForecastSeries:
    """Read ``start_time_iso8601,price_per_mwh`` rows into a price forecast."""
    return _load_series(path, "price_per_mwh", "price")[0]


def load_ambient_csv(path) -> ForecastSeries:
    """Read ``start_time_iso8601,temperature_c`` rows into an ambient forecast."""
    return _load_series(path, "temperature_c", "temperature")[0]


def load_forecasts(price_path, ambient_path) -> tuple[ForecastSeries, ForecastSeries]:
    """Load both forecasts and check they describe the same horizon."""
    price, p0 = _load_series(price_path, "price_per_mwh", "price")
    ambient, a0 = _load_series(ambient_path, "temperature_c", "temperature")
    if p0 != a0:
        raise InputError(f"price starts at {p0.isoformat()} but ambient at {a0.isoformat()}")
    if abs(price.horizon - ambient.horizon) > 1e-6:
        raise InputError(f"horizons differ: price {price.horizon} s, ambient {ambient.horizon} s")
    return price, ambient


# ---------------------------------------------------------------------------
# Population config
# ---------------------------------------------------------------------------

_FIELDS = ("alpha", "beta", "power_thermal", "efficiency", "setpoint", "delta", "theta0", "sigma0")


def population_from_dict(tree: dict) -> Population:
    loads = tree.get("loads") if isinstance(tree, dict) else None
    if not isinstance(loads, list) or not loads:
        raise InputError("population config needs a non-empty 'loads' list")
    out = []
    for i, entry in enumerate(loads):
        missing = [f for f in _FIELDS[:-1] if f not in entry]
        if missing:
            raise InputError(f"load {i}: missing fields {missing}")
        unknown = set(entry) - set(_FIELDS)
        if unknown:
            raise InputError(f"load {i}: unknown fields {sorted(unknown)}")
        kwargs = {f: float(entry[f]) for f in _FIELDS[:-1]}
        kwargs["sigma0"] = int(entry.get("sigma0", 0))
        try:
            out.append(TclParams(**kwargs))
        except ValidationError as exc:
            raise InputError(f"load {i}: {exc}") from None
    try:
        return Population(tuple(out))
    except ValidationError as exc:
        raise InputError(str(exc)) from None


def load_population(path) -> Population:
    """Read a population from JSON or YAML (``{"loads": [{...}, ...]}``)."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"{path}: no such file")
    text = path.read_text()
    if path.suffix.lower() in (".yaml", ".yml"):
        import yaml

        tree = yaml.safe_load(text)
    else:
        try:
            tree = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: {exc}") from None
    return population_from_dict(tree)


def save_population(pop: Population, path) -> None:
    Path(path).write_text(json.dumps({"loads": [load.to_dict() for load in pop]}, indent=2) + "\n")


def synth_population(
    n: int,
    seed: int = 0,
    ranges: dict | None = None,
    power_thermal: float = DEFAULT_POWER,
    efficiency: float = DEFAULT_EFFICIENCY,
) -> Population:
    """Random heterogeneous population; deterministic for a given seed.

    Each of ``alpha``, ``beta``, ``delta`` and ``setpoint`` is drawn uniformly
    from its range; initial temperatures are uniform within each band.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    r = dict(DEFAULT_RANGES)
    r.update(ranges or {})
    rng = np.random.default_rng(seed)
    draw = {name: rng.uniform(lo, hi, size=n) for name, (lo, hi) in r.items()}
    offsets = rng.uniform(-1.0, 1.0, size=n)
    modes = rng.integers(0, 2, size=n)
    loads = tuple(
        TclParams(
            alpha=float(draw["alpha"][i]),
            beta=float(draw["beta"][i]),
            power_thermal=power_thermal,
            efficiency=efficiency,
            setpoint=float(draw["setpoint"][i]),
            delta=float(draw["delta"][i]),
            theta0=float(draw["setpoint"][i] + offsets[i] * draw["delta"][i]),
            sigma0=int(modes[i]),
        )
        for i in range(n)
    )
    return Population(loads)


# ---------------------------------------------------------------------------
# Plan export
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def write_plan(plan: Plan, outdir, report: dict) -> list[Path]:
    """Write the flat-file plan bundle; returns the paths written."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    grid = plan.aggregate_power.grid
    n = len(plan.controls)
    paths = []

    p = outdir / "plan_aggregate.csv"
    with p.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_s", "power_kw"])
        for t, v in zip(grid, plan.aggregate_power.values):
            w.writerow([_fmt(t), _fmt(v)])
    paths.append(p)

    p = outdir / "plan_controls.csv"
    cols = np.array([u(grid) for u in plan.controls], dtype=int)
    with p.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_s"] + [f"load_{i}" for i in range(n)])
        for k, t in enumerate(grid):
            w.writerow([_fmt(t)] + cols[:, k].tolist())
    paths.append(p)

    p = outdir / "plan_trajectories.csv"
    temps = np.array([tr.values for tr in plan.trajectories])
    with p.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_s"] + [f"load_{i}" for i in range(n)])
        for k, t in enumerate(grid):
            w.writerow([_fmt(t)] + [f"{x:.9f}" for x in temps[:, k]])
    paths.append(p)

    p = outdir / "plan_report"
    p.write_text(format_report(report))
    paths.append(p)
    return paths


def format_report(report: dict) -> str:
    """Render a flat key/value block, one ``key = value`` per line."""
    lines = []
    for key, value in report.items():
        if isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
