"""Exact integration of single-TCL thermal dynamics.

With ambient temperature and control held constant, the indoor temperature
relaxes exponentially toward ``ambient - beta*P*u/alpha``. Every simulator
here walks the merged breakpoints of its inputs, advances in closed form and
locates boundary hits with the logarithmic crossing formula, so results are
exact up to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    ControlSignal,
    ForecastSeries,
    TclParams,
    Trajectory,
    ValidationError,
    uniform_grid,
)

FREE, UPPER, LOWER = 0, 1, -1

# Relative tolerance on sliding controls before they are declared infeasible.
_SLIDE_TOL = 1e-12


class SlidingInfeasibleError(ValueError):
    """Holding a boundary would need a control outside [0, 1]."""


class CoolingAssumptionError(ValueError):
    """Ambient temperature does not exceed the upper comfort bound."""


def step_exact(theta: float, ambient: float, u: float, dt: float, params: TclParams) -> float:
    """Advance the indoor temperature by ``dt`` seconds with constant inputs."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    target = ambient - params.beta * params.power_thermal * u / params.alpha
    return target + (theta - target) * math.exp(-params.alpha * dt)


def crossing_time(theta: float, target: float, level: float, alpha: float) -> float:
    """Time for ``target + (theta - target) e^{-alpha t}`` to reach ``level``.

    Returns ``inf`` when the level is not strictly between ``theta`` and
    ``target`` (including the asymptotic case ``level == target``).
    """
    if theta == level:
        return 0.0
    num = theta - target
    den = level - target
    if den == 0.0 or num == 0.0 or (num > 0) != (den > 0) or abs(den) > abs(num):
        return math.inf
    return math.log(num / den) / alpha


@dataclass(frozen=True)
class ExactPath:
    """Piecewise-exponential temperature path with its effective control.

    On piece ``k`` (``breakpoints[k] <= t < breakpoints[k+1]``) the temperature
    is ``targets[k] + (starts[k] - targets[k]) * exp(-alpha (t - t_k))``. Pieces
    where the state slides on a boundary have ``starts == targets`` and
    ``modes`` set to ``UPPER`` or ``LOWER``.
    """

    breakpoints: np.ndarray
    starts: np.ndarray
    targets: np.ndarray
    controls: np.ndarray
    modes: np.ndarray
    alpha: float

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        idx = np.clip(
            np.searchsorted(self.breakpoints, t_arr, side="right") - 1, 0, self.starts.size - 1
        )
        dt = t_arr - self.breakpoints[idx]
        out = self.targets[idx] + (self.starts[idx] - self.targets[idx]) * np.exp(-self.alpha * dt)
        return float(out) if t_arr.ndim == 0 else out

    @property
    def final(self) -> float:
        return float(self(self.breakpoints[-1]))

    def sample(self, grid: np.ndarray) -> Trajectory:
        return Trajectory(grid, self(grid))

    def control(self, binary: bool | None = None) -> ControlSignal:
        """Effective control as a step signal with redundant breakpoints merged."""
        vals = self.controls
        if binary is None:
            binary = bool(np.all((vals == 0.0) | (vals == 1.0)))
        return ControlSignal(self.breakpoints, vals, binary=binary).simplified()

    def extrema(self) -> tuple[float, float]:
        """Exact min and max of the path; each piece is monotone."""
        ends = self(self.breakpoints)
        return float(min(ends.min(), self.starts.min())), float(max(ends.max(), self.starts.max()))


class _PathBuilder:
    def __init__(self, alpha: float):
        self.alpha = alpha
        self.bp: list[float] = []
        self.starts: list[float] = []
        self.targets: list[float] = []
        self.controls: list[float] = []
        self.modes: list[int] = []

    def add(self, t0, theta0, target, u, mode):
        self.bp.append(t0)
        self.starts.append(theta0)
        self.targets.append(target)
        self.controls.append(u)
        self.modes.append(mode)

    def build(self, horizon: float) -> ExactPath:
        bp = np.array(self.bp + [horizon])
        # Drop zero-length pieces left by hits that land on a breakpoint.
        keep = np.diff(bp) > 0
        return ExactPath(
            np.append(bp[:-1][keep], horizon),
            np.array(self.starts)[keep],
            np.array(self.targets)[keep],
            np.array(self.controls)[keep],
            np.array(self.modes, dtype=int)[keep],
            self.alpha,
        )


def merged_breakpoints(*series) -> np.ndarray:
    """Union of breakpoints of step series sharing one horizon."""
    horizon = series[0].horizon
    for s in series[1:]:
        if abs(s.horizon - horizon) > 1e-9 * max(1.0, horizon):
            raise ValidationError("series must share the same horizon")
    bp = np.unique(np.concatenate([s.breakpoints for s in series]))
    bp = bp[bp < horizon]
    return np.append(bp, horizon)


def control_path(params: TclParams, ambient: ForecastSeries, control: ControlSignal) -> ExactPath:
    """Exact unclamped response to a given control."""
    bp = merged_breakpoints(ambient, control)
    mids = bp[:-1]
    amb = ambient(mids)
    u = control(mids)
    targets = amb - params.beta * params.power_thermal * u / params.alpha
    decay = np.exp(-params.alpha * np.diff(bp))
    starts = np.empty(mids.size)
    theta = params.theta0
    for k, (target, d) in enumerate(zip(targets.tolist(), decay.tolist())):
        starts[k] = theta
        theta = target + (theta - target) * d
    return ExactPath(bp, starts, targets, u.astype(float), np.zeros(mids.size, dtype=int), params.alpha)


def simulate_with_control(
    params: TclParams, ambient: ForecastSeries, control: ControlSignal, grid_step: float
) -> Trajectory:
    """Sample the exact unclamped response to ``control`` on a uniform grid."""
    grid = uniform_grid(ambient.horizon, grid_step)
    return control_path(params, ambient, control).sample(grid)


def hysteretic_path(params: TclParams, ambient: ForecastSeries) -> ExactPath:
    """Deadband thermostat: switch ON at the upper bound, OFF at the lower."""
    lo, hi = params.lower, params.upper
    if float(np.min(ambient.values)) < hi:
        raise CoolingAssumptionError("ambient below the upper comfort bound on a cooling run")
    drop = params.drop
    out = _PathBuilder(params.alpha)
    theta = params.theta0
    sigma = 1 if theta >= hi else 0 if theta <= lo else params.sigma0
    bp = ambient.breakpoints
    for k in range(len(ambient)):
        t, t_end, amb = float(bp[k]), float(bp[k + 1]), float(ambient.values[k])
        while t < t_end:
            target = amb - drop * sigma
            level = lo if sigma else hi
            hit = crossing_time(theta, target, level, params.alpha)
            if t + hit < t_end:
                out.add(t, theta, target, float(sigma), FREE)
                t += hit
                theta = level
                sigma = 1 - sigma
                continue
            out.add(t, theta, target, float(sigma), FREE)
            theta = target + (theta - target) * math.exp(-params.alpha * (t_end - t))
            t = t_end
    path = out.build(ambient.horizon)
    return path


def simulate_hysteretic(
    params: TclParams, ambient: ForecastSeries, grid_step: float
) -> tuple[Trajectory, ControlSignal]:
    """Free-running thermostat; the control keeps the exact switching instants."""
    grid = uniform_grid(ambient.horizon, grid_step)
    path = hysteretic_path(params, ambient)
    return path.sample(grid), path.control(binary=True)


def _slide_value(params: TclParams, ambient: float, boundary: float) -> float:
    v = params.alpha * (ambient - boundary) / (params.beta * params.power_thermal)
    if v < -_SLIDE_TOL or v > 1 + _SLIDE_TOL:
        raise SlidingInfeasibleError(
            f"holding {boundary:.4f} degC at ambient {ambient:.4f} degC needs control {v:.6f}"
        )
    return min(max(v, 0.0), 1.0)


def reflected_path(
    params: TclParams, ambient: ForecastSeries, base_control: ControlSignal
) -> ExactPath:
    """Exact response to ``base_control`` with sliding on the comfort bounds.

    While the base control would push the state outside the band, the state
    stays on the boundary and the effective control is the sliding value
    ``alpha*(ambient - boundary)/(beta*P)``.
    """
    lo, hi = params.lower, params.upper
    alpha, drop = params.alpha, params.drop
    bp = merged_breakpoints(ambient, base_control)
    out = _PathBuilder(alpha)
    theta = min(max(params.theta0, lo), hi)
    mids = bp[:-1]
    ambs = ambient(mids).tolist()
    us = base_control(mids).astype(float).tolist()
    edges = bp.tolist()
    for k in range(len(ambs)):
        t, t_end = edges[k], edges[k + 1]
        amb, u = ambs[k], us[k]
        target = amb - drop * u
        while t < t_end:
            if theta >= hi and target > hi:
                out.add(t, hi, hi, _slide_value(params, amb, hi), UPPER)
                theta = hi
                t = t_end
            elif theta <= lo and target < lo:
                out.add(t, lo, lo, _slide_value(params, amb, lo), LOWER)
                theta = lo
                t = t_end
            else:
                level = hi if target > theta else lo
                hit = crossing_time(theta, target, level, alpha)
                out.add(t, theta, target, u, FREE)
                if t + hit < t_end:
                    t += hit
                    theta = level
                else:
                    theta = target + (theta - target) * math.exp(-alpha * (t_end - t))
                    t = t_end
    return out.build(ambient.horizon)


def simulate_reflected(
    params: TclParams, ambient: ForecastSeries, base_control: ControlSignal, grid_step: float
) -> tuple[Trajectory, ControlSignal]:
    """Reflected simulation returning the sampled state and the effective control."""
    grid = uniform_grid(ambient.horizon, grid_step)
    path = reflected_path(params, ambient, base_control)
    return path.sample(grid), path.control()
