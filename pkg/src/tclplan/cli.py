"""Command-line pipeline: feasibility -> threshold -> reflection -> recovery."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .dynamics import CoolingAssumptionError, SlidingInfeasibleError
from .feasibility import check_feasible, tau_bounds
from .io import (
    InputError,
    format_report,
    load_forecasts,
    load_population,
    save_population,
    synth_population,
    write_plan,
)
from .model import EnergyBudget, Plan, ValidationError, validate_population
from .recovery import DutyCycleError, recover_binary, verify_matching
from .skorokhod import solve_budgeted
from .threshold import InfeasibleBudgetError, solve_unconstrained

log = logging.getLogger(__name__)

EXIT_OK, EXIT_INFEASIBLE, EXIT_INPUT = 0, 2, 3


class StageError(RuntimeError):
    """Pipeline failure tagged with the stage that raised it."""

    def __init__(self, stage: str, exc: Exception, exit_code: int):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage
        self.exit_code = exit_code
        self.report: dict = {}


@dataclass
class RunConfig:
    price_path: Path
    ambient_path: Path
    population_path: Path | None = None
    horizon: float | None = None
    grid_step: float = 60.0
    energy: float | None = None
    tau_bar: float | None = None
    min_switch_period: float = 90.0
    output_dir: Path | None = None
    seed: int = 0
    n_synthetic: int | None = None
    synth_ranges: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.energy is None) == (self.tau_bar is None):
            raise ValueError("provide exactly one of energy (kWh) or tau_bar")
        if not self.min_switch_period > 0:
            raise ValueError("min_switch_period must be positive")
        if not self.grid_step > 0:
            raise ValueError("grid_step must be positive")
        if self.population_path is None and not self.n_synthetic:
            raise ValueError("provide a population file or a synthetic population size")


def _budget(config: RunConfig, pop, horizon) -> EnergyBudget:
    if config.tau_bar is not None:
        return EnergyBudget.from_tau_bar(config.tau_bar, pop, horizon)
    return EnergyBudget.from_energy(config.energy, pop, horizon)


def _stage(name, exit_code=EXIT_INPUT):
    def wrap(fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (InfeasibleBudgetError,) as exc:
            raise StageError(name, exc, EXIT_INFEASIBLE) from exc
        except (InputError, ValidationError, ValueError, OSError) as exc:
            raise StageError(name, exc, exit_code) from exc

    return wrap


def run_plan(config: RunConfig) -> tuple[Plan, dict]:
    """Run the full planning pipeline; writes the output bundle when configured."""
    price, ambient = _stage("ingest")(load_forecasts, config.price_path, config.ambient_path)
    if config.horizon is not None and abs(config.horizon - price.horizon) > 1e-6:
        raise StageError(
            "ingest",
            InputError(f"forecasts cover {price.horizon} s, config horizon is {config.horizon} s"),
            EXIT_INPUT,
        )
    if config.population_path is not None:
        pop = _stage("population")(load_population, config.population_path)
    else:
        pop = _stage("population")(
            synth_population, config.n_synthetic, config.seed, config.synth_ranges or None
        )
    checks = validate_population(pop, ambient)
    if not checks.ok:
        raise StageError("population", InputError("; ".join(checks.violations)), EXIT_INPUT)

    T = price.horizon
    budget = _stage("budget")(_budget, config, pop, T)
    bounds = tau_bounds(pop, ambient, T)
    report: dict = {"n_loads": len(pop), "horizon_s": T, "tau_bar": budget.tau_bar,
                    "energy_kwh": budget.energy}
    report.update(bounds.as_dict())
    verdict = check_feasible(budget, bounds)
    report["feasible"] = verdict.accepted
    if not verdict.accepted:
        err = StageError("feasibility", InfeasibleBudgetError(verdict.message), EXIT_INFEASIBLE)
        err.report = report
        raise err

    unconstrained = _stage("threshold")(solve_unconstrained, pop, price, ambient, budget, config.grid_step)
    try:
        sol = solve_budgeted(pop, price, ambient, budget, config.grid_step)
    except InfeasibleBudgetError as exc:
        err = StageError("reflection", exc, EXIT_INFEASIBLE)
        err.report = report
        raise err from exc
    except (SlidingInfeasibleError, CoolingAssumptionError) as exc:
        raise StageError("reflection", exc, EXIT_INFEASIBLE) from exc
    try:
        plan = recover_binary(sol, pop, config.min_switch_period, config.grid_step)
    except DutyCycleError as exc:
        raise StageError("recovery", exc, EXIT_INFEASIBLE) from exc

    binary_on = sum(u.on_time() for u in plan.controls)
    report.update(
        {
            "threshold_price_unconstrained": unconstrained.threshold_price,
            "on_set_unconstrained": _intervals(unconstrained.on_set),
            "threshold_price": plan.threshold_price,
            "on_set": _intervals(plan.on_set),
            "on_time_per_load_s": plan.on_set.measure,
            "cost_unconstrained": unconstrained.cost,
            "cost_convexified": plan.convex_cost,
            "cost_binary": plan.cost,
            "cost_gap": plan.cost_gap,
            "realized_tau_convexified": sol.realized_on_time(),
            "realized_tau_binary": binary_on,
            "budget_tau": budget.tau,
            "min_switch_period_s": config.min_switch_period,
            "max_window_end_deviation_c": verify_matching(plan, sol, pop),
        }
    )
    if config.output_dir is not None:
        write_plan(plan, config.output_dir, report)
    return plan, report


def _intervals(on_set) -> str:
    return " ".join(f"[{a!r},{b!r})" for a, b in on_set.intervals) or "empty"


def _parse_fraction(text: str) -> float:
    return float(Fraction(text))


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--price", type=Path, required=True, help="price CSV (start_time_iso8601,price_per_mwh)")
    p.add_argument("--ambient", type=Path, required=True, help="ambient CSV (start_time_iso8601,temperature_c)")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--population", type=Path, help="population JSON/YAML file")
    src.add_argument("--synthetic", type=int, metavar="N", help="generate N synthetic loads")
    p.add_argument("--seed", type=int, default=0)
    budget = p.add_mutually_exclusive_group(required=True)
    budget.add_argument("--tau-bar", type=_parse_fraction, help="normalized ON time, e.g. 1/3")
    budget.add_argument("--energy", type=float, help="total energy budget in kWh")
    p.add_argument("--horizon", type=float, help="expected horizon in seconds")
    p.add_argument("--grid-step", type=float, default=60.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tclplan", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="compute and export a day-ahead plan")
    _add_common(p)
    p.add_argument("--tm", type=float, default=90.0, help="minimum switching period T_m in seconds")
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("feasibility", help="print the feasible budget interval")
    _add_common(p)

    p = sub.add_parser("synth", help="write a synthetic population config")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    return parser


def _config(args, **extra) -> RunConfig:
    return RunConfig(
        price_path=args.price,
        ambient_path=args.ambient,
        population_path=args.population,
        n_synthetic=args.synthetic,
        seed=args.seed,
        horizon=args.horizon,
        grid_step=args.grid_step,
        tau_bar=args.tau_bar,
        energy=args.energy,
        **extra,
    )


def _feasibility(args) -> int:
    config = _config(args)
    price, ambient = load_forecasts(config.price_path, config.ambient_path)
    pop = (
        load_population(config.population_path)
        if config.population_path
        else synth_population(config.n_synthetic, config.seed)
    )
    bounds = tau_bounds(pop, ambient, price.horizon)
    budget = _budget(config, pop, price.horizon)
    verdict = check_feasible(budget, bounds)
    report = {"tau_bar": budget.tau_bar, "energy_kwh": budget.energy, **bounds.as_dict(),
              "feasible": verdict.accepted, "verdict": verdict.message}
    sys.stdout.write(format_report(report))
    return EXIT_OK if verdict.accepted else EXIT_INFEASIBLE


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            save_population(synth_population(args.n, args.seed), args.out)
            return EXIT_OK
        if args.command == "feasibility":
            return _feasibility(args)
        _, report = run_plan(_config(args, min_switch_period=args.tm, output_dir=args.out))
        sys.stdout.write(format_report(report))
        return EXIT_OK
    except StageError as exc:
        if exc.report:
            sys.stdout.write(format_report(exc.report))
        if exc.exit_code == EXIT_INFEASIBLE:
            sys.stderr.write(f"infeasible: {exc}\n")
        else:
            sys.stderr.write(f"input error: {exc}\n")
        return exc.exit_code
    except (InputError, ValidationError, ValueError, OSError) as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
