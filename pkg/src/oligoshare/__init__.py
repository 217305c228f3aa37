"""Equilibrium models of data sharing between competing firms."""

from .coalitions import (
    GameResult,
    Partition,
    alpha_core_membership,
    avg_coalition_size,
    brute_force_game_solve,
    partition_profits,
    sequential_game_solve,
    theorem3_partition,
    treaty_equilibria,
    universal_treaty_is_equilibrium,
)
from .data_impact import CostModel, FirmProfile, expected_cost
from .duopoly import (
    bargaining_closed_form,
    bargaining_exact,
    full_share_decision,
    share_threshold,
)
from .errors import OligoshareError
from .experiments import ExperimentConfig, SweepRow, run_sweep, sample_sizes
from .market import (
    EquilibriumOutcome,
    MarketParams,
    Mode,
    check_demand_feasibility,
    demand_from_prices,
    inverse_demand,
    solve_equilibrium,
)

__version__ = "0.1.0"
