"""Day-ahead demand-response planning for thermostatically controlled loads."""

from .dynamics import (
    SlidingInfeasibleError,
    simulate_hysteretic,
    simulate_reflected,
    simulate_with_control,
)
from .estimator import DayAheadPlanner
from .feasibility import FeasibilityBounds, check_feasible, tau_bounds
from .model import (
    ControlSignal,
    EnergyBudget,
    ForecastSeries,
    OnSet,
    Plan,
    Population,
    TclParams,
    Trajectory,
    ValidationError,
    validate_population,
)
from .recovery import gamma_lower, gamma_upper, recover_binary, verify_matching
from .skorokhod import (
    skorokhod_one_sided,
    skorokhod_two_sided,
    solve_budgeted,
    solve_constrained,
)
from .threshold import InfeasibleBudgetError, on_set, solve_unconstrained, threshold_price

__version__ = "0.1.0"

__all__ = [
    "ControlSignal",
    "DayAheadPlanner",
    "EnergyBudget",
    "FeasibilityBounds",
    "ForecastSeries",
    "InfeasibleBudgetError",
    "OnSet",
    "Plan",
    "Population",
    "SlidingInfeasibleError",
    "TclParams",
    "Trajectory",
    "ValidationError",
    "check_feasible",
    "gamma_lower",
    "gamma_upper",
    "on_set",
    "recover_binary",
    "simulate_hysteretic",
    "simulate_reflected",
    "simulate_with_control",
    "skorokhod_one_sided",
    "skorokhod_two_sided",
    "solve_budgeted",
    "solve_constrained",
    "solve_unconstrained",
    "tau_bounds",
    "threshold_price",
    "validate_population",
    "verify_matching",
]
