"""Exhaustive reference optimizer for tiny slot-discretized instances.

Loads interact only through the shared ON-slot budget, so each load's
feasible ON patterns are enumerated once (``2^K`` masks, ``K <= 16``), the
cheapest pattern per ON count is kept, and per-load counts are combined by
enumerating every split of the population total.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import EPS, KWS_PER_MWH, TclParams

MAX_SLOTS = 16
MAX_LOADS = 3


class OracleTooLargeError(ValueError):
    """Instance exceeds the enumeration bound."""


@dataclass(frozen=True)
class DiscreteInstance:
    """Slot-discretized planning problem.

    Attributes:
        prices: per-slot price ($/MWh), length K.
        ambient: per-slot ambient temperature (degC), length K.
        loads: at most three loads sharing power and efficiency.
        on_slots: total ON slots for the whole population.
        slot_length: slot duration in seconds.
        bands: enforce comfort bands when True.
    """

    prices: tuple[float, ...]
    ambient: tuple[float, ...]
    loads: tuple[TclParams, ...]
    on_slots: int
    slot_length: float = 3600.0
    bands: bool = False

    def __post_init__(self):
        K = len(self.prices)
        if len(self.ambient) != K:
            raise ValueError("prices and ambient must have the same length")
        if K > MAX_SLOTS or len(self.loads) > MAX_LOADS:
            raise OracleTooLargeError(f"K={K}, N={len(self.loads)} exceeds K<={MAX_SLOTS}, N<={MAX_LOADS}")
        if not self.loads:
            raise ValueError("need at least one load")
        if not 0 <= self.on_slots <= K * len(self.loads):
            raise ValueError(f"on_slots={self.on_slots} outside [0, {K * len(self.loads)}]")

    @property
    def n_slots(self) -> int:
        return len(self.prices)


def _all_masks(K: int) -> np.ndarray:
    codes = np.arange(2**K, dtype=np.int64)
    return ((codes[:, None] >> np.arange(K)) & 1).astype(float)


def slot_temperatures(load: TclParams, ambient, slot_length: float, masks: np.ndarray) -> np.ndarray:
    """End-of-slot temperatures for every mask row (exact exponential stepping)."""
    decay = np.exp(-load.alpha * slot_length)
    amb = np.asarray(ambient, float)
    theta = np.full(masks.shape[0], load.theta0)
    out = np.empty(masks.shape)
    for k in range(masks.shape[1]):
        target = amb[k] - load.drop * masks[:, k]
        theta = target + (theta - target) * decay
        out[:, k] = theta
    return out


def brute_force_optimum(inst: DiscreteInstance) -> tuple[float, list[np.ndarray]]:
    """Global minimum cost and every minimizing ``N x K`` control matrix.

    Temperatures are monotone within a slot, so checking slot endpoints is
    enough to certify comfort.
    """
    K = inst.n_slots
    masks = _all_masks(K)
    counts = masks.sum(axis=1).astype(int)
    pe = inst.loads[0].power_thermal / inst.loads[0].efficiency
    mask_cost = pe * inst.slot_length * (masks @ np.asarray(inst.prices, float)) / KWS_PER_MWH

    per_load = []  # per load: {count: (best cost, mask indices)}
    for load in inst.loads:
        ok = np.ones(masks.shape[0], bool)
        if inst.bands:
            temps = slot_temperatures(load, inst.ambient, inst.slot_length, masks)
            ok = np.all((temps >= load.lower - EPS) & (temps <= load.upper + EPS), axis=1)
        table = {}
        for c in range(K + 1):
            sel = np.flatnonzero(ok & (counts == c))
            if sel.size:
                best = mask_cost[sel].min()
                tol = EPS * max(1.0, abs(best))
                table[c] = (float(best), sel[mask_cost[sel] <= best + tol])
        per_load.append(table)

    best_cost = np.inf
    best_combos = []
    for combo in itertools.product(*(sorted(t) for t in per_load)):
        if sum(combo) != inst.on_slots:
            continue
        cost = sum(per_load[i][c][0] for i, c in enumerate(combo))
        tol = EPS * max(1.0, abs(cost))
        if cost < best_cost - tol:
            best_cost, best_combos = cost, [combo]
        elif cost <= best_cost + tol:
            best_combos.append(combo)
    if not best_combos:
        raise ValueError("no control meets the budget and the comfort bands")

    argmins = []
    for combo in best_combos:
        choices = [per_load[i][c][1] for i, c in enumerate(combo)]
        for pick in itertools.product(*choices):
            argmins.append(masks[list(pick)].astype(int))
    return float(best_cost), argmins

