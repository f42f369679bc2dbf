"""Skorokhod reflection maps and the comfort-constrained solution.

The maps act on sampled trajectories. ``skorokhod_two_sided`` runs in linear
time using the recursion

    G_n = min(max(G_{n-1}, [phi_n - U]^+), phi_n - L)

for ``G_n = sup_{k<=n} min([phi_k - U]^+, min_{k<=j<=n} (phi_j - L))``;
``skorokhod_two_sided_direct`` is the literal quadratic transcription used as
a reference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from scipy.optimize import brentq

from .dynamics import ExactPath, reflected_path
from .model import (
    EPS,
    ControlSignal,
    EnergyBudget,
    ForecastSeries,
    Population,
    Trajectory,
    ValidationError,
    uniform_grid,
)
from .threshold import (
    InfeasibleBudgetError,
    ThresholdSolution,
    on_set,
    procurement_cost,
    solve_unconstrained,
)


def _values(y):
    if isinstance(y, Trajectory):
        return y.grid, y.values
    return None, np.asarray(y, dtype=float)


def _wrap(grid, values):
    return values if grid is None else Trajectory(grid, values)


def skorokhod_one_sided(y, L: float):
    """Lower reflection ``y(t) + sup_{s<=t} [L - y(s)]^+``."""
    grid, v = _values(y)
    push = np.maximum.accumulate(np.maximum(L - v, 0.0))
    return _wrap(grid, v + push)


def _check_band(L: float, U: float):
    if not L < U:
        raise ValidationError(f"need L < U, got L={L}, U={U}")


def skorokhod_two_sided(y, L: float, U: float):
    """Two-sided reflection onto ``[L, U]`` in linear time."""
    _check_band(L, U)
    grid, v = _values(y)
    phi = _values(skorokhod_one_sided(v, L))[1]
    a = np.maximum(phi - U, 0.0)
    b = phi - L
    g = np.empty_like(phi)
    acc = -np.inf
    for n in range(phi.size):
        acc = min(max(acc, a[n]), b[n])
        g[n] = acc
    return _wrap(grid, phi - g)


def skorokhod_two_sided_direct(y, L: float, U: float):
    """Literal O(n^2) evaluation of the two-sided map (reference only)."""
    _check_band(L, U)
    grid, v = _values(y)
    n = v.size
    phi = np.empty(n)
    for t in range(n):
        phi[t] = v[t] + max(0.0, float(np.max(L - v[: t + 1])))
    out = np.empty(n)
    for t in range(n):
        # inner[s] = inf_{s<=r<=t} (phi(r) - L)
        inner = np.minimum.accumulate((phi[: t + 1] - L)[::-1])[::-1]
        terms = np.minimum(np.maximum(phi[: t + 1] - U, 0.0), inner)
        out[t] = phi[t] - terms.max()
    return _wrap(grid, out)


@dataclass(frozen=True)
class ConstrainedSolution:
    """Comfort-constrained optimum: reflected states and convexified controls."""

    states: tuple[Trajectory, ...]
    convex_controls: tuple[ControlSignal, ...]
    paths: tuple[ExactPath, ...]
    base: ThresholdSolution
    ambient: ForecastSeries
    cost: float

    @property
    def price(self) -> ForecastSeries:
        return self.base.price

    def realized_on_time(self) -> float:
        """Total ON measure of the convexified controls, summed over loads."""
        return float(sum(v.on_time() for v in self.convex_controls))


def solve_constrained(
    base: ThresholdSolution, pop: Population, ambient: ForecastSeries, grid_step: float
) -> ConstrainedSolution:
    """Apply the comfort bands to the synchronized threshold controls.

    States come from the reflected simulation, which also yields the sliding
    (fractional) controls; the reflection-map formula serves as a check.
    """
    grid = uniform_grid(ambient.horizon, grid_step)
    paths = tuple(reflected_path(load, ambient, u) for load, u in zip(pop, base.controls))
    states = tuple(p.sample(grid) for p in paths)
    controls = tuple(p.control() for p in paths)
    cost = procurement_cost(base.price, controls, pop.electrical_power)
    return ConstrainedSolution(states, controls, paths, base, ambient, cost)


def map_states(base: ThresholdSolution, pop: Population):
    """Reflection-map image of each free threshold trajectory on its own band."""
    return tuple(
        skorokhod_two_sided(state, load.lower, load.upper) for state, load in zip(base.states, pop)
    )


def realized_on_time(
    pop: Population, price: ForecastSeries, ambient: ForecastSeries, tau_per_load: float
) -> float:
    """Total sliding-adjusted ON time when every load follows the cheapest ``tau_per_load`` seconds."""
    u = on_set(price, tau_per_load).indicator(price.horizon)
    total = 0.0
    for load in pop:
        path = reflected_path(load, ambient, u)
        total += float(np.dot(path.controls, np.diff(path.breakpoints)))
    return total


def calibrate_on_time(
    pop: Population,
    price: ForecastSeries,
    ambient: ForecastSeries,
    budget: EnergyBudget,
    rtol: float = 1e-10,
) -> float:
    """Per-load threshold ON time whose reflected realization spends exactly ``tau``.

    Sliding on a bound draws a fractional control, so the synchronized
    threshold controls of the unconstrained problem generally do not meet
    the budget once the comfort bands act. The realized ON time is
    nondecreasing and continuous in the threshold ON time, so a bracketing
    root finder recovers the budget-consistent threshold.
    """
    T = price.horizon
    target = budget.tau

    def gap(s):
        return realized_on_time(pop, price, ambient, s) - target

    lo, hi = gap(0.0), gap(T)
    scale = max(1.0, target)
    if lo > EPS * scale:
        raise InfeasibleBudgetError(
            f"budget tau={target:.6g} below the least realizable ON time {lo + target:.6g}"
        )
    if hi < -EPS * scale:
        raise InfeasibleBudgetError(
            f"budget tau={target:.6g} above the largest realizable ON time {hi + target:.6g}"
        )
    if abs(lo) <= EPS * scale:
        return 0.0
    if abs(hi) <= EPS * scale:
        return T
    return brentq(gap, 0.0, T, xtol=rtol * T, rtol=4 * np.finfo(float).eps, maxiter=200)


def solve_budgeted(
    pop: Population,
    price: ForecastSeries,
    ambient: ForecastSeries,
    budget: EnergyBudget,
    grid_step: float,
) -> ConstrainedSolution:
    """Comfort-constrained solution whose convexified controls spend the budget."""
    per_load = calibrate_on_time(pop, price, ambient, budget)
    shifted = EnergyBudget.from_tau_bar(per_load / price.horizon, pop, price.horizon)
    base = solve_unconstrained(pop, price, ambient, shifted, grid_step)
    return solve_constrained(base, pop, ambient, grid_step)
