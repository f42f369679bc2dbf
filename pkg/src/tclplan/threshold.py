"""Threshold-price solution of the budget-constrained problem without comfort bands.

Every load runs on the same ON-set: the cheapest ``tau/N`` seconds of the
price forecast. Ties on a price plateau are resolved with the fewest ON/OFF
switchings, then earliest first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import ExactPath, control_path
from .model import (
    EPS,
    KWS_PER_MWH,
    ControlSignal,
    EnergyBudget,
    ForecastSeries,
    OnSet,
    Population,
    Trajectory,
    ValidationError,
    uniform_grid,
)


class InfeasibleBudgetError(ValueError):
    """The requested ON time cannot be allocated on the horizon."""


def occupancy(price: ForecastSeries, level: float) -> float:
    """Total time (s) during which the price is at or below ``level``."""
    return float(np.sum(price.durations[price.values <= level]))


def threshold_price(price: ForecastSeries, tau_per_load: float) -> float:
    """Smallest segment price whose occupancy reaches ``tau_per_load``."""
    T = price.horizon
    if tau_per_load > T + EPS:
        raise InfeasibleBudgetError(f"tau/N={tau_per_load} exceeds horizon {T}")
    if tau_per_load <= 0:
        return 0.0
    levels = np.unique(price.values)
    occ = np.array([occupancy(price, lv) for lv in levels])
    idx = int(np.searchsorted(occ, tau_per_load - EPS * max(1.0, T), side="left"))
    return float(levels[min(idx, levels.size - 1)])


def _plateau_pieces(price: ForecastSeries, level: float):
    """Maximal runs of segments at exactly ``level`` with their neighbour status.

    Status is ``"on"`` (strictly cheaper segment), ``"off"`` or ``"edge"``.
    """
    vals, bp = price.values, price.breakpoints
    m = vals.size

    def status(k):
        if k < 0 or k >= m:
            return "edge"
        return "on" if vals[k] < level else "off"

    pieces = []
    k = 0
    while k < m:
        if vals[k] == level:
            j = k
            while j + 1 < m and vals[j + 1] == level:
                j += 1
            pieces.append((float(bp[k]), float(bp[j + 1]), status(k - 1), status(j + 1)))
            k = j + 1
        else:
            k += 1
    return pieces


_FULL_DELTA = {"on": -1, "edge": 0, "off": 1}
_PARTIAL_DELTA = {"on": 0, "edge": 1, "off": 2}


def _choose_filler(pieces, need: float, tol: float):
    """Pick plateau sub-intervals of total length ``need`` with fewest switchings.

    Taking a whole piece never costs more switchings than taking part of it,
    so an optimal filler uses full pieces plus at most one partial piece. Full
    subsets are enumerated by dynamic programming over their total length.
    """
    lengths = [b - a for a, b, _, _ in pieces]
    full_cost = [_FULL_DELTA[l] + _FULL_DELTA[r] for _, _, l, r in pieces]
    part_cost = [min(_PARTIAL_DELTA[l], _PARTIAL_DELTA[r]) for _, _, l, r in pieces]

    def key(x):
        return round(x / tol)

    def best_subsets(exclude):
        # total-length key -> (cost, chosen indices)
        states = {0: (0, (), 0.0)}
        for i, ln in enumerate(lengths):
            if i == exclude:
                continue
            for k_sum, (c, chosen, s) in list(states.items()):
                ns = s + ln
                if ns > need + tol:
                    continue
                cand = (c + full_cost[i], chosen + (i,), ns)
                nk = key(ns)
                if nk not in states or cand[:2] < states[nk][:2]:
                    states[nk] = cand
        return states

    candidates = []
    states = best_subsets(exclude=None)
    exact = states.get(key(need))
    if exact is not None:
        candidates.append((exact[0], exact[1], None, 0.0))
    for p, ln in enumerate(lengths):
        for c, chosen, s in best_subsets(exclude=p).values():
            rest = need - s
            if tol < rest < ln - tol:
                candidates.append((c + part_cost[p], chosen, p, rest))

    def intervals(cand):
        _, chosen, p, rest = cand
        ivs = [(pieces[i][0], pieces[i][1]) for i in chosen]
        if p is not None:
            a, b, left, right = pieces[p]
            if _PARTIAL_DELTA[left] <= _PARTIAL_DELTA[right]:
                ivs.append((a, a + rest))
            else:
                ivs.append((b - rest, b))
        return sorted(ivs)

    best = min(candidates, key=lambda c: (c[0], intervals(c)))
    return intervals(best)


def on_set(price: ForecastSeries, tau_per_load: float) -> OnSet:
    """Cheapest ON-set of measure ``tau_per_load`` with canonical tie-breaking."""
    T = price.horizon
    if tau_per_load > T + EPS:
        raise InfeasibleBudgetError(f"tau/N={tau_per_load} exceeds horizon {T}")
    if tau_per_load <= EPS:
        return OnSet(())
    pstar = threshold_price(price, tau_per_load)
    bp, vals = price.breakpoints, price.values
    strict = [(float(bp[k]), float(bp[k + 1])) for k in range(vals.size) if vals[k] < pstar]
    need = tau_per_load - sum(b - a for a, b in strict)
    filler: list[tuple[float, float]] = []
    if need > EPS:
        # keep the tolerance well below tiny requests
        tol = min(EPS * max(1.0, T), 1e-3 * need)
        filler = _choose_filler(_plateau_pieces(price, pstar), need, tol)
    return OnSet.from_intervals(strict + filler)


def procurement_cost(price: ForecastSeries, controls, electrical_power: float) -> float:
    """Exact cost ``(P/eta) * integral(price * sum_i u_i)`` in currency."""
    total = 0.0
    for u in controls:
        bp = np.unique(np.concatenate([price.breakpoints, u.breakpoints]))
        mids = bp[:-1]
        total += float(np.sum(price(mids) * u(mids) * np.diff(bp)))
    return electrical_power * total / KWS_PER_MWH


@dataclass(frozen=True)
class ThresholdSolution:
    """Synchronized optimum without comfort constraints."""

    threshold_price: float
    on_set: OnSet
    controls: tuple[ControlSignal, ...]
    states: tuple[Trajectory, ...]
    paths: tuple[ExactPath, ...]
    costate_time: Trajectory
    costate_energy: float
    costate_temps: float
    cost: float
    price: ForecastSeries
    budget: EnergyBudget


def solve_unconstrained(
    pop: Population,
    price: ForecastSeries,
    ambient: ForecastSeries,
    budget: EnergyBudget,
    grid_step: float,
) -> ThresholdSolution:
    """Threshold policy, free temperature paths and costates."""
    T = price.horizon
    if abs(ambient.horizon - T) > EPS * max(1.0, T) or abs(budget.horizon - T) > EPS * max(1.0, T):
        raise ValidationError("price, ambient and budget must share one horizon")
    if not (-EPS <= budget.tau_bar <= 1 + EPS):
        raise InfeasibleBudgetError(f"tau_bar={budget.tau_bar} outside [0, 1]")
    n = len(pop)
    per_load = min(max(budget.tau_per_load, 0.0), T)
    pstar = threshold_price(price, per_load)
    S = on_set(price, per_load)
    u = S.indicator(T)
    controls = (u,) * n
    paths = tuple(control_path(load, ambient, u) for load in pop)
    grid = uniform_grid(T, grid_step)
    states = tuple(path.sample(grid) for path in paths)

    pe = pop.electrical_power
    in_set = u(grid) == 1.0
    lam_time = np.where(in_set, pe * n * (pstar - price(grid)), 0.0)
    cost = procurement_cost(price, [u], pe) * n
    return ThresholdSolution(
        threshold_price=pstar,
        on_set=S,
        controls=controls,
        states=states,
        paths=paths,
        costate_time=Trajectory(grid, lam_time),
        costate_energy=-pe * pstar,
        costate_temps=0.0,
        cost=cost,
        price=price,
        budget=budget,
    )


def rearrangement_cost(price: ForecastSeries, tau_per_load: float, n_loads: int, electrical_power: float) -> float:
    """Cost via the increasing rearrangement of the price over ``[0, tau/N]``."""
    order = np.argsort(price.values, kind="stable")
    vals, durs = price.values[order], price.durations[order]
    ends = np.cumsum(durs)
    starts = ends - durs
    covered = np.clip(tau_per_load - starts, 0.0, durs)
    return electrical_power * n_loads * float(np.dot(vals, covered)) / KWS_PER_MWH


__all__ = [
    "InfeasibleBudgetError",
    "ThresholdSolution",
    "occupancy",
    "on_set",
    "procurement_cost",
    "rearrangement_cost",
    "solve_unconstrained",
    "threshold_price",
]
