"""Domain types shared by the planner: load parameters, step series, plans."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

#: Global absolute tolerance for invariant checks (seconds, degC, fractions).
EPS = 1e-9

#: kW * s per MWh, used to turn (kW * s * currency/MWh) into currency.
KWS_PER_MWH = 3.6e6
KWS_PER_KWH = 3600.0


class ValidationError(ValueError):
    """Raised when a domain object is constructed with a violated invariant."""


def _frozen_array(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float).ravel()
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# Loads
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TclParams:
    """Thermal coefficients, comfort band and initial state of one cooling TCL.

    ``alpha`` is in 1/s, ``beta`` in degC/(kW*s), ``power_thermal`` in kW and
    temperatures in degC. The comfort band is ``[setpoint - delta,
    setpoint + delta]``.
    """

    alpha: float
    beta: float
    power_thermal: float
    efficiency: float
    setpoint: float
    delta: float
    theta0: float
    sigma0: int = 0

    def __post_init__(self):
        for name in ("alpha", "beta", "power_thermal", "efficiency", "delta"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be strictly positive, got {value}")
        for name in ("setpoint", "theta0"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        if self.sigma0 not in (0, 1):
            raise ValidationError(f"sigma0 must be 0 or 1, got {self.sigma0}")
        if not (self.lower - EPS <= self.theta0 <= self.upper + EPS):
            raise ValidationError(
                f"theta0={self.theta0} outside comfort band [{self.lower}, {self.upper}]"
            )

    @property
    def lower(self) -> float:
        return self.setpoint - self.delta

    @property
    def upper(self) -> float:
        return self.setpoint + self.delta

    @property
    def drop(self) -> float:
        """Steady-state temperature offset of the ON mode, beta*P/alpha."""
        return self.beta * self.power_thermal / self.alpha

    def slide_control(self, ambient: float | np.ndarray, boundary: float):
        """Fractional control that holds the temperature at ``boundary``."""
        return self.alpha * (np.asarray(ambient) - boundary) / (self.beta * self.power_thermal)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "power_thermal": self.power_thermal,
            "efficiency": self.efficiency,
            "setpoint": self.setpoint,
            "delta": self.delta,
            "theta0": self.theta0,
            "sigma0": self.sigma0,
        }


@dataclass(frozen=True)
class Population:
    """Ordered collection of loads sharing thermal power P and efficiency eta."""

    loads: tuple[TclParams, ...]

    def __post_init__(self):
        loads = tuple(self.loads)
        object.__setattr__(self, "loads", loads)
        if len(loads) == 0:
            raise ValidationError("population must contain at least one load")
        p0, e0 = loads[0].power_thermal, loads[0].efficiency
        for load in loads[1:]:
            if abs(load.power_thermal - p0) > EPS * max(1.0, abs(p0)):
                raise ValidationError("heterogeneous thermal power across loads")
            if abs(load.efficiency - e0) > EPS * max(1.0, abs(e0)):
                raise ValidationError("heterogeneous efficiency across loads")

    def __len__(self) -> int:
        return len(self.loads)

    def __iter__(self):
        return iter(self.loads)

    def __getitem__(self, i) -> TclParams:
        return self.loads[i]

    @property
    def power_thermal(self) -> float:
        return self.loads[0].power_thermal

    @property
    def efficiency(self) -> float:
        return self.loads[0].efficiency

    @property
    def electrical_power(self) -> float:
        """Electrical power drawn by one ON load, P/eta, in kW."""
        return self.power_thermal / self.efficiency

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(load, name) for load in self.loads], dtype=float)


# ---------------------------------------------------------------------------
# Piecewise-constant series
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StepSeries:
    """Right-continuous step function on ``[0, T]``.

    ``breakpoints`` has one more entry than ``values``; segment ``k`` covers
    ``[breakpoints[k], breakpoints[k+1])``. Evaluation at ``T`` returns the
    last segment's value.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bp = _frozen_array(self.breakpoints, "breakpoints")
        vals = _frozen_array(self.values, "values")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        if bp.size < 2 or vals.size != bp.size - 1:
            raise ValidationError("need len(breakpoints) == len(values) + 1 >= 2")
        if bp[0] != 0.0:
            raise ValidationError("breakpoints must start at 0")
        if np.any(np.diff(bp) <= 0):
            raise ValidationError("breakpoints must be strictly increasing")

    @property
    def horizon(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def durations(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def __len__(self) -> int:
        return self.values.size

    def segment_index(self, t):
        idx = np.searchsorted(self.breakpoints, t, side="right") - 1
        return np.clip(idx, 0, self.values.size - 1)

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        out = self.values[self.segment_index(t_arr)]
        return float(out) if t_arr.ndim == 0 else out

    def integral(self) -> float:
        """Exact integral over ``[0, T]``."""
        return float(np.dot(self.values, self.durations))

    def mean(self) -> float:
        return self.integral() / self.horizon

    def simplified(self):
        """Copy with adjacent equal-valued segments merged."""
        keep = np.concatenate(([True], self.values[1:] != self.values[:-1]))
        bp = np.append(self.breakpoints[:-1][keep], self.breakpoints[-1])
        return type(self)._rebuild(self, bp, self.values[keep])

    @classmethod
    def _rebuild(cls, template, breakpoints, values):
        return cls(breakpoints, values)


@dataclass(frozen=True)
class ForecastSeries(StepSeries):
    """Day-ahead forecast: ``kind`` is ``"price"`` (currency/MWh) or ``"temperature"`` (degC)."""

    kind: str = "price"

    def __post_init__(self):
        super().__post_init__()
        if self.kind not in ("price", "temperature"):
            raise ValidationError(f"unknown forecast kind {self.kind!r}")
        if self.kind == "price" and np.any(self.values <= 0):
            raise ValidationError("price forecast must be strictly positive")

    @classmethod
    def constant(cls, value: float, horizon: float, kind: str = "price") -> "ForecastSeries":
        return cls([0.0, horizon], [value], kind=kind)

    @classmethod
    def hourly(cls, values: Sequence[float], kind: str = "price", step: float = 3600.0):
        values = np.asarray(values, dtype=float)
        return cls(np.arange(values.size + 1) * step, values, kind=kind)

    @classmethod
    def _rebuild(cls, template, breakpoints, values):
        return cls(breakpoints, values, kind=template.kind)


@dataclass(frozen=True)
class ControlSignal(StepSeries):
    """Piecewise-constant control: binary ({0,1}) or convexified ([0,1])."""

    binary: bool = True

    def __post_init__(self):
        super().__post_init__()
        v = self.values
        if self.binary:
            if not np.all((v == 0.0) | (v == 1.0)):
                raise ValidationError("binary control values must be 0 or 1")
        elif np.any(v < -EPS) or np.any(v > 1 + EPS):
            raise ValidationError("convexified control values must lie in [0, 1]")

    @classmethod
    def constant(cls, value: float, horizon: float) -> "ControlSignal":
        return cls([0.0, horizon], [value], binary=value in (0.0, 1.0))

    @classmethod
    def _rebuild(cls, template, breakpoints, values):
        return cls(breakpoints, values, binary=template.binary)

    def on_time(self) -> float:
        """Total ON measure, the integral of the control over ``[0, T]``."""
        return self.integral()

    def switch_times(self) -> np.ndarray:
        """Times in ``(0, T)`` where the value changes."""
        vals = self.values
        change = vals[1:] != vals[:-1]
        return self.breakpoints[1:-1][change]


# ---------------------------------------------------------------------------
# ON-sets, budgets, trajectories, plans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OnSet:
    """Finite disjoint union of sorted half-open intervals ``[a, b)``."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        object.__setattr__(self, "intervals", ivs)
        prev_end = -math.inf
        for a, b in ivs:
            if not b > a:
                raise ValidationError(f"empty or reversed interval [{a}, {b})")
            if a < prev_end:
                raise ValidationError("intervals must be sorted and disjoint")
            prev_end = b

    @classmethod
    def from_intervals(cls, intervals) -> "OnSet":
        """Sort, drop empties and merge touching intervals."""
        ivs = sorted((float(a), float(b)) for a, b in intervals if b - a > 0)
        merged: list[list[float]] = []
        for a, b in ivs:
            if merged and a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        return cls(tuple((a, b) for a, b in merged))

    @property
    def measure(self) -> float:
        return float(sum(b - a for a, b in self.intervals))

    def __contains__(self, t: float) -> bool:
        return any(a <= t < b for a, b in self.intervals)

    def indicator(self, horizon: float) -> ControlSignal:
        """Binary control equal to 1 on the set and 0 elsewhere on ``[0, horizon]``."""
        bp = [0.0]
        vals: list[float] = []
        for a, b in self.intervals:
            if a > bp[-1]:
                vals.append(0.0)
                bp.append(a)
            vals.append(1.0)
            bp.append(min(b, horizon))
        if bp[-1] < horizon:
            vals.append(0.0)
            bp.append(horizon)
        if not vals:
            return ControlSignal([0.0, horizon], [0.0])
        return ControlSignal(bp, vals)


@dataclass(frozen=True)
class EnergyBudget:
    """Total energy target E (kWh) with its ON-time forms tau and tau_bar.

    ``tau = eta*E/P`` is in load-seconds, ``tau_bar = tau/(N*T)`` is
    dimensionless.
    """

    energy: float
    tau: float
    tau_bar: float
    n_loads: int
    horizon: float

    def __post_init__(self):
        expected_tau = self.tau_bar * self.n_loads * self.horizon
        if abs(expected_tau - self.tau) > EPS * max(1.0, abs(self.tau)):
            raise ValidationError("tau and tau_bar are inconsistent")
        if not (-EPS <= self.tau_bar <= 1 + EPS):
            raise ValidationError(f"tau_bar={self.tau_bar} outside [0, 1]")

    @classmethod
    def from_energy(cls, energy: float, pop: Population, horizon: float) -> "EnergyBudget":
        tau = pop.efficiency * energy * KWS_PER_KWH / pop.power_thermal
        return cls(energy, tau, tau / (len(pop) * horizon), len(pop), horizon)

    @classmethod
    def from_tau_bar(cls, tau_bar: float, pop: Population, horizon: float) -> "EnergyBudget":
        tau = tau_bar * len(pop) * horizon
        energy = tau * pop.power_thermal / pop.efficiency / KWS_PER_KWH
        return cls(energy, tau, tau_bar, len(pop), horizon)

    @property
    def tau_per_load(self) -> float:
        return self.tau / self.n_loads


@dataclass(frozen=True)
class Trajectory:
    """Samples of a scalar signal on a uniform time grid over ``[0, T]``."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = _frozen_array(self.grid, "grid")
        vals = _frozen_array(self.values, "values")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", vals)
        if grid.size != vals.size or grid.size < 2:
            raise ValidationError("grid and values must have equal length >= 2")
        steps = np.diff(grid)
        if steps[0] <= 0 or np.any(np.abs(steps - steps[0]) > 1e-6 * steps[0]):
            raise ValidationError("grid must be uniform with positive step")

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def __len__(self) -> int:
        return self.values.size


def uniform_grid(horizon: float, step: float) -> np.ndarray:
    """Uniform grid ``0, step, ..., horizon``; ``horizon`` must be a multiple of ``step``."""
    if not step > 0:
        raise ValidationError("grid_step must be positive")
    n = int(round(horizon / step))
    if n < 1 or abs(n * step - horizon) > 1e-9 * max(1.0, horizon):
        raise ValidationError(f"horizon {horizon} is not a multiple of grid_step {step}")
    return np.linspace(0.0, horizon, n + 1)


class Window(NamedTuple):
    """One duty-cycle window of a boundary-sliding episode."""

    start: float
    end: float
    boundary: str  # "upper" or "lower"
    gamma: float

    @property
    def length(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class Plan:
    """Implementable day-ahead plan: binary controls, temperatures and aggregate power."""

    controls: tuple[ControlSignal, ...]
    trajectories: tuple[Trajectory, ...]
    aggregate_power: Trajectory
    cost: float
    threshold_price: float
    on_set: OnSet
    convex_cost: float = math.nan
    windows: tuple[tuple[Window, ...], ...] = field(default=())
    min_switch_period: float = math.nan

    @property
    def cost_gap(self) -> float:
        """Implementable cost minus the cost of the convexified optimum."""
        return self.cost - self.convex_cost


# ---------------------------------------------------------------------------
# Assumption checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_population(pop, ambient: ForecastSeries) -> ValidationReport:
    """Check the modelling assumptions instead of raising.

    ``pop`` may be a :class:`Population`, or a sequence of :class:`TclParams`
    or raw parameter mappings, so that unvalidated configs can be diagnosed
    before any domain object is built.
    """
    loads = [
        load.to_dict() if isinstance(load, TclParams) else dict(load)
        for load in (pop.loads if isinstance(pop, Population) else pop)
    ]
    if not loads:
        return ValidationReport(("empty population",))
    problems: list[str] = []
    uppers = []
    for i, load in enumerate(loads):
        lower = load["setpoint"] - load["delta"]
        upper = load["setpoint"] + load["delta"]
        uppers.append(upper)
        if not (lower - EPS <= load["theta0"] <= upper + EPS):
            problems.append(f"load {i}: initial temperature outside comfort band")
    if len({load["power_thermal"] for load in loads}) > 1:
        problems.append("heterogeneous thermal power")
    if len({load["efficiency"] for load in loads}) > 1:
        problems.append("heterogeneous efficiency")
    min_ambient = float(np.min(ambient.values))
    if min_ambient <= max(uppers):
        problems.append(
            f"non-cooling ambient: min ambient {min_ambient:.3f} "
            f"does not exceed max upper bound {max(uppers):.3f}"
        )
    return ValidationReport(tuple(problems))
