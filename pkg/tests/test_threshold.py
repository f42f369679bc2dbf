from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st

from conftest import make_load
from tclplan.model import KWS_PER_MWH, EnergyBudget, ForecastSeries, Population
from tclplan.threshold import (
    InfeasibleBudgetError,
    occupancy,
    on_set,
    procurement_cost,
    rearrangement_cost,
    solve_unconstrained,
    threshold_price,
)

H = 3600.0


def amb_for(price):
    return ForecastSeries.constant(32.0, price.horizon, "temperature")


def switchings(S, T):
    return sum((a > 0) + (b < T) for a, b in S.intervals)


class TestOccupancy:
    def test_examples(self):
        p = ForecastSeries.hourly([10.0, 20.0, 30.0])
        assert occupancy(p, 5.0) == 0.0
        assert occupancy(p, 30.0) == 3 * H
        assert occupancy(p, 20.0) == 2 * H


class TestThresholdPrice:
    def test_increasing(self):
        assert threshold_price(ForecastSeries.hourly([10.0, 20.0, 30.0]), H) == 10.0

    def test_decreasing(self):
        assert threshold_price(ForecastSeries.hourly([30.0, 20.0, 10.0]), 2 * H) == 20.0

    @given(level=st.floats(1.0, 100.0), frac=st.floats(0.01, 1.0))
    def test_constant(self, level, frac):
        p = ForecastSeries.constant(level, 10 * H)
        assert threshold_price(p, frac * 10 * H) == level

    def test_scan_oracle(self, rng):
        for _ in range(20):
            vals = rng.uniform(5, 80, 12)
            p = ForecastSeries.hourly(vals)
            need = rng.uniform(0.1, 12) * H
            scan = min(v for v in vals if occupancy(p, v) >= need - 1e-6)
            assert threshold_price(p, need) == scan

    def test_too_long(self):
        with pytest.raises(InfeasibleBudgetError):
            threshold_price(ForecastSeries.hourly([1.0]), 2 * H)


class TestOnSet:
    def test_increasing(self):
        p = ForecastSeries.hourly(np.arange(1.0, 13.0))
        assert on_set(p, 4.5 * H).intervals == ((0.0, 4.5 * H),)

    def test_decreasing(self):
        p = ForecastSeries.hourly(np.arange(12.0, 0.0, -1.0))
        assert on_set(p, 4.5 * H).intervals == ((12 * H - 4.5 * H, 12 * H),)

    def test_contiguous_block(self):
        S = on_set(ForecastSeries.hourly([30.0, 20.0, 10.0]), 2 * H)
        assert S.intervals == ((H, 3 * H),)

    def test_plateau_minimal_switchings(self):
        # Filler next to the strictly cheaper hour avoids a second ON block.
        p = ForecastSeries.hourly([20.0, 50.0, 20.0, 10.0, 50.0])
        S = on_set(p, 1.5 * H)
        assert S.intervals == ((2.5 * H, 4 * H),)

    def test_plateau_earliest_tie(self):
        p = ForecastSeries.hourly([50.0, 20.0, 50.0, 20.0, 50.0])
        assert on_set(p, H).intervals == ((H, 2 * H),)

    def test_plateau_prefers_whole_piece(self):
        p = ForecastSeries.hourly([20.0, 20.0, 50.0, 20.0, 50.0])
        S = on_set(p, H)
        assert S.intervals == ((0.0, H),)  # touches the horizon edge: one switching only

    def test_brute_force_switchings(self, rng):
        for _ in range(30):
            vals = rng.choice([10.0, 20.0, 30.0], size=8)
            p = ForecastSeries.hourly(vals)
            k = int(rng.integers(1, 8))
            S = on_set(p, k * H)
            best = min(
                (sum(vals[list(c)]), _count_switches(c, 8))
                for c in itertools.combinations(range(8), k)
            )
            cost = procurement_cost(p, [S.indicator(8 * H)], 1.0)
            assert cost * KWS_PER_MWH / H == pytest.approx(best[0])
            assert switchings(S, 8 * H) <= best[1]

    @given(st.lists(st.floats(1.0, 100.0), min_size=1, max_size=24), st.floats(0.0, 1.0))
    def test_measure_exact(self, vals, frac):
        p = ForecastSeries.hourly(vals)
        need = frac * p.horizon
        assert on_set(p, need).measure == pytest.approx(need, abs=1e-9 * p.horizon)


def _count_switches(chosen, K):
    u = np.zeros(K, int)
    u[list(chosen)] = 1
    return int(np.sum(np.abs(np.diff(u))))


class TestSolveUnconstrained:
    def test_zero_budget(self, two_loads, peaky_price, hot_day):
        sol = solve_unconstrained(
            two_loads, peaky_price, hot_day, EnergyBudget.from_tau_bar(0.0, two_loads, 86400.0), 60.0
        )
        assert sol.cost == 0.0 and sol.on_set.measure == 0.0

    def test_exhaustive_single_load(self, rng):
        pop = Population((make_load(),))
        for _ in range(5):
            vals = rng.permutation(np.linspace(10, 70, 12)) + rng.uniform(0, 0.1, 12)
            p = ForecastSeries.hourly(vals)
            sol = solve_unconstrained(pop, p, amb_for(p), EnergyBudget.from_tau_bar(0.25, pop, 12 * H), 60.0)
            best = min(sum(vals[list(c)]) for c in itertools.combinations(range(12), 3))
            expected = pop.electrical_power * H * best / KWS_PER_MWH
            assert sol.cost == pytest.approx(expected, rel=1e-12)

    def test_costates(self, two_loads, peaky_price, hot_day):
        budget = EnergyBudget.from_tau_bar(0.3, two_loads, 86400.0)
        sol = solve_unconstrained(two_loads, peaky_price, hot_day, budget, 60.0)
        lam = sol.costate_time
        inside = np.array([t in sol.on_set for t in lam.grid])
        cheaper = peaky_price(lam.grid) < sol.threshold_price
        assert np.all(lam.values[cheaper] > 0)
        assert np.all(lam.values[~inside] == 0)
        assert sol.costate_energy == pytest.approx(-two_loads.electrical_power * sol.threshold_price)
        assert sol.costate_temps == 0.0

    def test_synchronized(self, two_loads, peaky_price, hot_day):
        budget = EnergyBudget.from_tau_bar(0.3, two_loads, 86400.0)
        sol = solve_unconstrained(two_loads, peaky_price, hot_day, budget, 60.0)
        assert all(u is sol.controls[0] for u in sol.controls)
        assert sol.controls[0].on_time() == pytest.approx(budget.tau_per_load, abs=1e-9)

    def test_threshold_consistency(self, rng):
        pop = Population((make_load(),))
        for _ in range(20):
            p = ForecastSeries.hourly(rng.choice([15.0, 25.0, 40.0, 55.0], 24))
            sol = solve_unconstrained(pop, p, amb_for(p), EnergyBudget.from_tau_bar(rng.uniform(0, 1), pop, 24 * H), 600.0)
            for k in range(24):
                a, b = k * H, (k + 1) * H
                covered = sum(max(0.0, min(b, e) - max(a, s)) for s, e in sol.on_set.intervals)
                if covered >= H - 1e-9:
                    assert p.values[k] <= sol.threshold_price
                elif covered <= 1e-9:
                    assert p.values[k] >= sol.threshold_price

    @given(
        st.lists(st.floats(1.0, 100.0), min_size=2, max_size=12),
        st.floats(0.0, 1.0),
        st.integers(1, 3),
    )
    @settings(max_examples=50, deadline=None)
    @example(vals=[1.0, 1.0], frac=1e-10, n=1)
    def test_rearrangement_identity(self, vals, frac, n):
        pop = Population(tuple(make_load() for _ in range(n)))
        p = ForecastSeries.hourly(vals)
        budget = EnergyBudget.from_tau_bar(frac, pop, p.horizon)
        sol = solve_unconstrained(pop, p, amb_for(p), budget, 600.0)
        ref = rearrangement_cost(p, budget.tau_per_load, n, pop.electrical_power)
        assert sol.cost == pytest.approx(ref, rel=1e-9, abs=1e-12)

    def test_exchange_optimality(self, rng):
        pop = Population((make_load(),))
        p = ForecastSeries.hourly(rng.uniform(10, 60, 8))
        sol = solve_unconstrained(pop, p, amb_for(p), EnergyBudget.from_tau_bar(0.4, pop, 8 * H), 600.0)
        u = sol.controls[0]
        grid = np.arange(0, 8 * H, 900.0)
        on = [t for t in grid if u(t) == 1 and u(t + 899.0) == 1]
        off = [t for t in grid if u(t) == 0 and u(t + 899.0) == 0]
        for a in on:
            for b in off:
                assert p(b) >= p(a) - 1e-12

    def test_horizon_mismatch(self, two_loads, peaky_price):
        with pytest.raises(ValueError):
            solve_unconstrained(
                two_loads,
                peaky_price,
                ForecastSeries.constant(32.0, 3600.0, "temperature"),
                EnergyBudget.from_tau_bar(0.3, two_loads, 86400.0),
                60.0,
            )
