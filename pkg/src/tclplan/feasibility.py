"""Feasible energy-budget interval for a TCL population."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import EPS, KWS_PER_KWH, EnergyBudget, ForecastSeries, Population


@dataclass(frozen=True)
class FeasibilityBounds:
    """Normalized ON-time bounds and the matching energies (kWh).

    ``tau_bar_upper`` keeps the raw closed-form value; ``upper_clipped`` is set
    when it exceeded 1, in which case the usable interval is
    ``[tau_bar_lower, 1]``. ``slide_range`` is a supplementary diagnostic: the
    smallest and largest instantaneous sliding control over loads and time.
    """

    tau_bar_lower: float
    tau_bar_upper: float
    energy_lower: float
    energy_upper: float
    mean_ambient: float
    upper_clipped: bool = False
    slide_range: tuple[float, float] = (np.nan, np.nan)

    @property
    def usable_upper(self) -> float:
        return min(self.tau_bar_upper, 1.0)

    def as_dict(self) -> dict:
        return {
            "mean_ambient_c": self.mean_ambient,
            "tau_bar_lower": self.tau_bar_lower,
            "tau_bar_upper": self.tau_bar_upper,
            "tau_bar_upper_usable": self.usable_upper,
            "upper_clipped": self.upper_clipped,
            "energy_lower_kwh": self.energy_lower,
            "energy_upper_kwh": self.energy_upper,
            "slide_control_min": self.slide_range[0],
            "slide_control_max": self.slide_range[1],
        }


def mean_ambient(ambient: ForecastSeries) -> float:
    """Exact time average of a step forecast."""
    return ambient.mean()


def tau_bounds(pop: Population, ambient: ForecastSeries, horizon: float | None = None) -> FeasibilityBounds:
    """Closed-form ON-fraction bounds from holding every load on one boundary."""
    T = ambient.horizon if horizon is None else float(horizon)
    if abs(T - ambient.horizon) > EPS * max(1.0, T):
        raise ValueError(f"ambient covers {ambient.horizon} s, expected {T} s")
    n, P, eta = len(pop), pop.power_thermal, pop.efficiency
    ratio = pop.column("alpha") / pop.column("beta")
    upper, lower = pop.column("setpoint") + pop.column("delta"), pop.column("setpoint") - pop.column("delta")
    avg = mean_ambient(ambient)
    lo = float(np.sum(ratio * (avg - upper)) / (n * P))
    hi = float(np.sum(ratio * (avg - lower)) / (n * P))
    to_kwh = n * P * T / eta / KWS_PER_KWH

    amb = ambient.values
    slide_u = ratio[:, None] * (amb[None, :] - upper[:, None]) / P
    slide_l = ratio[:, None] * (amb[None, :] - lower[:, None]) / P
    slide = (float(min(slide_u.min(), slide_l.min())), float(max(slide_u.max(), slide_l.max())))
    return FeasibilityBounds(lo, hi, lo * to_kwh, hi * to_kwh, avg, hi > 1.0, slide)


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    violated: str | None = None
    message: str = ""

    def __bool__(self) -> bool:
        return self.accepted


def check_feasible(budget: EnergyBudget, bounds: FeasibilityBounds, tol: float = EPS) -> Verdict:
    """Accept iff ``tau_bar`` lies in ``[tau_bar_lower, min(tau_bar_upper, 1)]``."""
    tb = budget.tau_bar
    if tb < 0 - tol:
        return Verdict(False, "nonnegative", f"tau_bar={tb:.6g} < 0")
    if tb < bounds.tau_bar_lower - tol:
        return Verdict(
            False, "lower", f"tau_bar={tb:.6g} below tau_bar_lower={bounds.tau_bar_lower:.6g}"
        )
    if tb > bounds.usable_upper + tol:
        which = "unit" if bounds.upper_clipped else "upper"
        return Verdict(
            False, which, f"tau_bar={tb:.6g} above usable upper bound {bounds.usable_upper:.6g}"
        )
    return Verdict(True, None, "feasible")
