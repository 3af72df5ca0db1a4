"""Locational complexity of distribution networks: measure, cost and restructuring."""

from .complexity import ComplexityBreakdown, closed_system_invariance_check, decompose, pars_complexity
from .economics import ProfitReport, complexity_cost, facility_revenue, gross_profit, z_plex
from .harness import GridSpec, RunRecord, pattern_checks, profit_curves, run_grid, synth_instance
from .model import CostParams, Instance, Network, ValidationError, demand_shares, validate_instance
from .restructuring import Move, RestructureResult, rationalise, rebalance, reduce, replay
from .solvers import (BudgetExceeded, SolveResult, allocate_nearest, one_median, solve_kmedian,
                      solve_kmedianplex)

__all__ = [
    "BudgetExceeded", "ComplexityBreakdown", "CostParams", "GridSpec", "Instance", "Move", "Network",
    "ProfitReport", "RestructureResult", "RunRecord", "SolveResult", "ValidationError",
    "allocate_nearest", "closed_system_invariance_check", "complexity_cost", "decompose",
    "demand_shares", "facility_revenue", "gross_profit", "one_median", "pars_complexity",
    "pattern_checks", "profit_curves", "rationalise", "rebalance", "reduce", "replay", "run_grid",
    "solve_kmedian", "solve_kmedianplex", "synth_instance", "validate_instance", "z_plex",
]
