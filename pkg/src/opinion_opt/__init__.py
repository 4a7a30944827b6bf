"""Equilibria and resistance interventions for averaging opinion dynamics."""

from .budgeted import (
    ExhaustiveTooLarge,
    GreedyState,
    baseline_score,
    baseline_top_opinion,
    best_assignment,
    exhaustive_opt,
    greedy_select,
    marginal_gain,
)
from .equilibrium import (
    EquilibriumResult,
    OpinionProfile,
    iterate_dynamics,
    mc_estimate,
    solve_equilibrium,
    total_opinion,
)
from .graph import Graph, GraphParseError, GraphValidationError, parse_edge_list, random_walk_apply
from .harness import ExperimentConfig, gen_opinions, gen_resistance, run_experiment
from .unbudgeted import (
    BoxBounds,
    InterventionPlan,
    extremize_coordinates,
    gradient_in_x,
    maximize_unbudgeted,
    minimize_unbudgeted,
    objective_in_x,
)

__version__ = "0.1.0"
