from __future__ import annotations

import numpy as np
import pytest

from conftest import AMBIENT_CSV, PRICE_CSV
from tclplan.cli import EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK, RunConfig, main, run_plan
from tclplan.io import synth_population

PLAN_FILES = ("plan_aggregate.csv", "plan_controls.csv", "plan_trajectories.csv", "plan_report")


def plan_args(out, *extra):
    return [
        "plan", "--price", str(PRICE_CSV), "--ambient", str(AMBIENT_CSV),
        "--synthetic", "20", "--seed", "5", "--tm", "90", "--out", str(out), *extra,
    ]


class TestRunConfig:
    def test_exactly_one_budget(self):
        with pytest.raises(ValueError):
            RunConfig(PRICE_CSV, AMBIENT_CSV, n_synthetic=5)
        with pytest.raises(ValueError):
            RunConfig(PRICE_CSV, AMBIENT_CSV, n_synthetic=5, tau_bar=0.3, energy=10.0)

    @pytest.mark.parametrize("field", ["min_switch_period", "grid_step"])
    def test_positive(self, field):
        with pytest.raises(ValueError):
            RunConfig(PRICE_CSV, AMBIENT_CSV, n_synthetic=5, tau_bar=0.3, **{field: 0.0})


class TestPlanCommand:
    def test_outputs_and_determinism(self, tmp_path, capsys):
        assert main(plan_args(tmp_path / "a", "--tau-bar", "1/3")) == EXIT_OK
        assert main(plan_args(tmp_path / "b", "--tau-bar", "1/3")) == EXIT_OK
        for name in PLAN_FILES:
            first = (tmp_path / "a" / name).read_bytes()
            assert first == (tmp_path / "b" / name).read_bytes()
        report = (tmp_path / "a" / "plan_report").read_text()
        for key in ("threshold_price", "on_set", "tau_bar_lower", "cost_convexified", "cost_binary",
                    "max_window_end_deviation_c"):
            assert f"\n{key} = " in report

    def test_aggregate_equals_on_count(self, tmp_path):
        assert main(plan_args(tmp_path, "--tau-bar", "1/3")) == EXIT_OK
        agg = np.loadtxt(tmp_path / "plan_aggregate.csv", delimiter=",", skiprows=1)
        ctl = np.loadtxt(tmp_path / "plan_controls.csv", delimiter=",", skiprows=1)
        assert np.array_equal(agg[:, 0], ctl[:, 0])
        assert np.array_equal(agg[:, 1], (14.0 / 2.5) * ctl[:, 1:].sum(axis=1))

    def test_energy_budget(self, tmp_path):
        pop = synth_population(20, seed=5)
        energy = 20 * 86400.0 / 3 * pop.power_thermal / pop.efficiency / 3600.0
        assert main(plan_args(tmp_path, "--energy", repr(energy))) == EXIT_OK

    def test_infeasible(self, tmp_path, capsys):
        assert main(plan_args(tmp_path, "--tau-bar", "0.05")) == EXIT_INFEASIBLE
        captured = capsys.readouterr()
        assert "tau_bar_lower = " in captured.out and "infeasible" in captured.err

    def test_input_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("time,price\n")
        args = plan_args(tmp_path / "o", "--tau-bar", "1/3")
        args[args.index("--price") + 1] = str(bad)
        assert main(args) == EXIT_INPUT
        assert "[ingest]" in capsys.readouterr().err

    def test_horizon_mismatch(self, tmp_path):
        assert main(plan_args(tmp_path, "--tau-bar", "1/3", "--horizon", "3600")) == EXIT_INPUT


class TestOtherCommands:
    def test_feasibility(self, capsys):
        code = main(["feasibility", "--price", str(PRICE_CSV), "--ambient", str(AMBIENT_CSV),
                     "--synthetic", "50", "--tau-bar", "1/3"])
        assert code == EXIT_OK
        assert "feasible = True" in capsys.readouterr().out

    def test_synth_then_plan(self, tmp_path):
        pop_file = tmp_path / "pop.json"
        assert main(["synth", "--n", "4", "--seed", "2", "--out", str(pop_file)]) == EXIT_OK
        code = main(["plan", "--price", str(PRICE_CSV), "--ambient", str(AMBIENT_CSV),
                     "--population", str(pop_file), "--tau-bar", "1/3", "--out", str(tmp_path / "o")])
        assert code == EXIT_OK


def test_run_plan_report(tmp_path):
    cfg = RunConfig(PRICE_CSV, AMBIENT_CSV, n_synthetic=10, seed=1, tau_bar=1 / 3)
    plan, report = run_plan(cfg)
    assert report["feasible"] is True
    assert abs(report["realized_tau_convexified"] - report["budget_tau"]) <= 1e-6 * report["budget_tau"]
    assert report["max_window_end_deviation_c"] < 1e-9
    assert len(plan.controls) == 10
