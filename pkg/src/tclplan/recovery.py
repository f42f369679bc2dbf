"""Binary control recovery under a minimum switching period.

While a convexified control slides on a comfort bound, each window of length
``Tm`` is replaced by a single ON block whose length makes the temperature at
the window end match the sliding solution exactly: on the upper bound the
window starts ON, on the lower bound it ends ON.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import LOWER, UPPER, ExactPath, control_path
from .model import (
    EPS,
    ControlSignal,
    ForecastSeries,
    Plan,
    Population,
    TclParams,
    Trajectory,
    Window,
    uniform_grid,
)
from .skorokhod import ConstrainedSolution
from .threshold import procurement_cost


class DutyCycleError(ValueError):
    """Control over a window cannot be realized as a trailing ON block."""


@dataclass(frozen=True)
class DutyCycle:
    gamma_upper: float
    gamma_lower: float
    window: float

    def __post_init__(self):
        for g in (self.gamma_upper, self.gamma_lower):
            if not (-EPS <= g <= self.window + EPS):
                raise ValueError(f"duty time {g} outside [0, {self.window}]")


def _as_steps(v_window, Tm: float):
    """Normalize a window control to (starts, ends, values) in local time."""
    if isinstance(v_window, ControlSignal):
        bp, vals = v_window.breakpoints, v_window.values
        return bp[:-1], bp[1:], vals
    if np.isscalar(v_window):
        return np.array([0.0]), np.array([Tm]), np.array([float(v_window)])
    starts, ends, vals = v_window
    return np.asarray(starts, float), np.asarray(ends, float), np.asarray(vals, float)


def weighted_integral(v_window, Tm: float, alpha: float) -> float:
    """``int_0^Tm e^{alpha s} v(s) ds`` for a step control, segment by segment."""
    a, b, v = _as_steps(v_window, Tm)
    a = np.clip(a, 0.0, Tm)
    b = np.clip(b, 0.0, Tm)
    return float(np.sum(v * np.exp(alpha * a) * np.expm1(alpha * (b - a))) / alpha)


def _saturated(v_window, Tm: float) -> float | None:
    """0 or ``Tm`` when the control is identically OFF or ON over the window."""
    a, b, v = _as_steps(v_window, Tm)
    v = v[(np.minimum(b, Tm) - np.maximum(a, 0.0)) > 0]
    if np.all(v == 0.0):
        return 0.0
    if np.all(v == 1.0):
        return Tm
    return None


def gamma_upper(v_window, Tm: float, alpha: float) -> float:
    """Leading ON time that matches the window-end temperature on the upper bound."""
    fixed = _saturated(v_window, Tm)
    if fixed is not None:
        return fixed
    integral = weighted_integral(v_window, Tm, alpha)
    return min(max(math.log1p(alpha * integral) / alpha, 0.0), Tm)


def gamma_lower(v_window, Tm: float, alpha: float) -> float:
    """Trailing ON time that matches the window-end temperature on the lower bound."""
    fixed = _saturated(v_window, Tm)
    if fixed is not None:
        return fixed
    integral = weighted_integral(v_window, Tm, alpha)
    x = alpha * math.exp(-alpha * Tm) * integral
    if x >= 1.0:
        raise DutyCycleError(f"weighted integral {integral} too large for a {Tm} s window")
    return min(max(-math.log1p(-x) / alpha, 0.0), Tm)


def _episodes(path: ExactPath):
    """Maximal runs of sliding pieces on one bound: (start, end, mode, first, last)."""
    modes = path.modes
    out = []
    k = 0
    while k < modes.size:
        m = modes[k]
        if m == 0:
            k += 1
            continue
        j = k
        while j + 1 < modes.size and modes[j + 1] == m:
            j += 1
        out.append((float(path.breakpoints[k]), float(path.breakpoints[j + 1]), int(m), k, j))
        k = j + 1
    return out


def tile_episode(start: float, end: float, Tm: float) -> list[tuple[float, float]]:
    """Split ``[start, end)`` into windows of length ``Tm`` from its start.

    A remainder shorter than ``Tm/2`` is merged into the preceding window;
    otherwise it forms a final short window.
    """
    length = end - start
    tol = EPS * max(1.0, abs(end))
    n_full = int(math.floor(length / Tm + 1e-12))
    rest = length - n_full * Tm
    edges = [start + j * Tm for j in range(n_full + 1)]
    if rest > tol:
        if n_full >= 1 and rest < 0.5 * Tm:
            edges[-1] = end
        else:
            edges.append(end)
    else:
        edges[-1] = end
    return [(a, b) for a, b in zip(edges[:-1], edges[1:]) if b - a > tol]


def _window_integrals(path: ExactPath, first: int, last: int, windows, alpha: float) -> np.ndarray:
    pa = path.breakpoints[first : last + 1]
    pb = path.breakpoints[first + 1 : last + 2]
    pv = path.controls[first : last + 1]
    w0 = np.array([w[0] for w in windows])[:, None]
    w1 = np.array([w[1] for w in windows])[:, None]
    lo = np.maximum(pa[None, :], w0)
    hi = np.minimum(pb[None, :], w1)
    span = np.clip(hi - lo, 0.0, None)
    terms = pv[None, :] * np.exp(alpha * (lo - w0)) * np.expm1(alpha * span)
    return terms.sum(axis=1) / alpha


def recover_load(path: ExactPath, params: TclParams, Tm: float):
    """Binary control and duty-cycle windows for one load."""
    alpha = params.alpha
    starts: list[np.ndarray] = []
    values: list[np.ndarray] = []
    windows: list[Window] = []
    bp = path.breakpoints
    cursor = 0
    for e0, e1, mode, first, last in _episodes(path):
        starts.append(bp[cursor:first])
        values.append(path.controls[cursor:first])
        cursor = last + 1
        tiles = tile_episode(e0, e1, Tm)
        integrals = _window_integrals(path, first, last, tiles, alpha)
        w0 = np.array([w[0] for w in tiles])
        w1 = np.array([w[1] for w in tiles])
        width = w1 - w0
        if mode == UPPER:
            g = np.clip(np.log1p(alpha * integrals) / alpha, 0.0, width)
            on_at, off_at, label = w0, w0 + g, "upper"
        else:
            x = alpha * np.exp(-alpha * width) * integrals
            if np.any(x >= 1.0):
                bad = int(np.argmax(x >= 1.0))
                raise DutyCycleError(f"window [{w0[bad]}, {w1[bad]}) cannot be realized")
            g = np.clip(-np.log1p(-x) / alpha, 0.0, width)
            on_at, off_at, label = w1 - g, w1, "lower"
        # each window: OFF from its start, ON on [on_at, off_at), OFF to its end
        starts.append(np.column_stack([w0, on_at, off_at]).ravel())
        values.append(np.tile([0.0, 1.0, 0.0], w0.size))
        windows.extend(map(Window, w0.tolist(), w1.tolist(), [label] * w0.size, g.tolist()))
    starts.append(bp[cursor:-1])
    values.append(path.controls[cursor:])

    horizon = float(bp[-1])
    starts = np.append(np.concatenate(starts), horizon)
    vals = np.concatenate(values)
    keep = np.diff(starts) > 0
    control = ControlSignal(np.append(starts[:-1][keep], horizon), vals[keep]).simplified()
    return control, tuple(windows)


def recover_binary(sol: ConstrainedSolution, pop: Population, Tm: float, grid_step: float | None = None) -> Plan:
    """Implementable binary plan from the convexified constrained solution."""
    if not Tm > 0:
        raise ValueError("Tm must be positive")
    ambient = sol.ambient
    grid = sol.states[0].grid if grid_step is None else uniform_grid(ambient.horizon, grid_step)
    controls, windows, trajectories = [], [], []
    for load, path in zip(pop, sol.paths):
        u, w = recover_load(path, load, Tm)
        controls.append(u)
        windows.append(w)
        trajectories.append(control_path(load, ambient, u).sample(grid))
    pe = pop.electrical_power
    on_count = np.sum([u(grid) for u in controls], axis=0)
    aggregate = Trajectory(grid, pe * on_count)
    cost = procurement_cost(sol.price, controls, pe)
    return Plan(
        controls=tuple(controls),
        trajectories=tuple(trajectories),
        aggregate_power=aggregate,
        cost=cost,
        threshold_price=sol.base.threshold_price,
        on_set=sol.base.on_set,
        convex_cost=sol.cost,
        windows=tuple(windows),
        min_switch_period=Tm,
    )


def verify_matching(plan: Plan, sol: ConstrainedSolution, pop: Population, Tm: float | None = None) -> float:
    """Largest window-end gap between the binary and the convexified temperatures."""
    worst = 0.0
    for load, u, wins, ref in zip(pop, plan.controls, plan.windows, sol.paths):
        if not wins:
            continue
        ends = np.array([w.end for w in wins])
        actual = control_path(load, sol.ambient, u)(ends)
        worst = max(worst, float(np.max(np.abs(actual - ref(ends)))))
    return worst


def excursion_bound(params: TclParams, ambient: ForecastSeries, window: float) -> float:
    """Largest distance from a bound reachable within one window.

    Starting on a bound ``b`` the temperature relaxes toward targets in
    ``{ambient, ambient - beta*P/alpha}``, so it stays within
    ``D * (1 - exp(-alpha*window))`` of ``b`` with ``D`` the farthest target.
    """
    amb = ambient.values
    targets = np.concatenate([amb, amb - params.drop])
    dist = max(
        float(np.max(np.abs(targets - params.upper))),
        float(np.max(np.abs(targets - params.lower))),
    )
    return dist * -math.expm1(-params.alpha * window)
