"""Estimator-style wrapper around the planning pipeline.

``DayAheadPlanner.fit`` takes the population (as a :class:`Population` or a
parameter matrix) together with the two forecasts and computes the plan;
``predict`` samples the planned aggregate power at arbitrary times.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .feasibility import check_feasible, tau_bounds
from .model import EnergyBudget, ForecastSeries, Population, TclParams, ValidationError
from .recovery import recover_binary, verify_matching
from .skorokhod import solve_budgeted
from .threshold import InfeasibleBudgetError, solve_unconstrained

PARAM_COLUMNS = ("alpha", "beta", "power_thermal", "efficiency", "setpoint", "delta", "theta0", "sigma0")


def check_population(X) -> Population:
    """Coerce ``X`` to a :class:`Population`.

    Accepts a population, a sequence of :class:`TclParams`, or a 2-D array
    whose columns follow ``PARAM_COLUMNS`` (``sigma0`` may be omitted).
    """
    if isinstance(X, Population):
        return X
    if len(X) and all(isinstance(x, TclParams) for x in X):
        return Population(tuple(X))
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2 or arr.shape[1] not in (len(PARAM_COLUMNS) - 1, len(PARAM_COLUMNS)):
        raise ValidationError(
            f"expected a 2-D array with {len(PARAM_COLUMNS) - 1} or {len(PARAM_COLUMNS)} columns, got shape {arr.shape}"
        )
    if arr.shape[0] == 0:
        raise ValidationError("population must contain at least one load")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("population parameters must be finite")
    loads = []
    for row in arr:
        kw = dict(zip(PARAM_COLUMNS, row))
        kw["sigma0"] = int(kw.get("sigma0", 0))
        loads.append(TclParams(**kw))
    return Population(tuple(loads))


def check_forecast(series, kind: str) -> ForecastSeries:
    """Accept a :class:`ForecastSeries` or a sequence of hourly values."""
    if isinstance(series, ForecastSeries):
        if series.kind != kind:
            raise ValidationError(f"expected a {kind} series, got {series.kind}")
        return series
    return ForecastSeries.hourly(np.asarray(series, dtype=float), kind=kind)


def check_budget(tau_bar, energy, pop: Population, horizon: float) -> EnergyBudget:
    """Exactly one of ``tau_bar`` or ``energy`` (kWh) must be set."""
    if (tau_bar is None) == (energy is None):
        raise ValidationError("set exactly one of tau_bar or energy")
    if tau_bar is not None:
        return EnergyBudget.from_tau_bar(float(tau_bar), pop, horizon)
    return EnergyBudget.from_energy(float(energy), pop, horizon)


class DayAheadPlanner(BaseEstimator):
    """Minimum-cost day-ahead schedule for a TCL population.

    Args:
        tau_bar: normalized ON time; mutually exclusive with ``energy``.
        energy: energy budget in kWh.
        min_switch_period: minimum switching period of the binary plan (s).
        grid_step: output sampling step (s).

    Attributes:
        plan_: the recovered binary :class:`Plan`.
        solution_: the convexified comfort-constrained solution.
        bounds_: feasible budget interval.
        budget_: the budget used.
        threshold_price_: threshold price of the unconstrained problem.
        max_deviation_: largest window-end temperature gap after recovery.
    """

    def __init__(self, tau_bar=None, energy=None, min_switch_period=90.0, grid_step=60.0):
        self.tau_bar = tau_bar
        self.energy = energy
        self.min_switch_period = min_switch_period
        self.grid_step = grid_step

    def fit(self, X, y=None, *, price, ambient):
        pop = check_population(X)
        price = check_forecast(price, "price")
        ambient = check_forecast(ambient, "temperature")
        T = price.horizon
        if abs(ambient.horizon - T) > 1e-6:
            raise ValidationError("price and ambient horizons differ")
        budget = check_budget(self.tau_bar, self.energy, pop, T)
        bounds = tau_bounds(pop, ambient, T)
        verdict = check_feasible(budget, bounds)
        if not verdict.accepted:
            raise InfeasibleBudgetError(verdict.message)

        base = solve_unconstrained(pop, price, ambient, budget, self.grid_step)
        sol = solve_budgeted(pop, price, ambient, budget, self.grid_step)
        plan = recover_binary(sol, pop, self.min_switch_period, self.grid_step)

        self.population_ = pop
        self.budget_ = budget
        self.bounds_ = bounds
        self.threshold_price_ = base.threshold_price
        self.solution_ = sol
        self.plan_ = plan
        self.max_deviation_ = verify_matching(plan, sol, pop)
        self.n_features_in_ = len(PARAM_COLUMNS)
        return self

    def predict(self, times) -> np.ndarray:
        """Planned aggregate electrical power (kW) at ``times`` (seconds)."""
        check_is_fitted(self, "plan_")
        t = np.asarray(times, dtype=float)
        counts = sum(u(t) for u in self.plan_.controls)
        return self.population_.electrical_power * np.asarray(counts, dtype=float)

    def score(self, X=None, y=None) -> float:
        """Negative implementable cost of the fitted plan."""
        check_is_fitted(self, "plan_")
        return -self.plan_.cost
