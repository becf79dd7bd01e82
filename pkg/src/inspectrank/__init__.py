"""Pre-event prioritization of post-earthquake building inspections."""

from .costmodel import CostConfig, CostMatrix, InspectionCostModel, misprediction_cost
from .decision import PredeterminedDecision, decide_all, optimal_decision
from .errors import ConfigError, DomainError, InspectRankError, ParseError, SizeError, ValidationError
from .fragility import FragilityCurve, StateProbabilities, evaluate, state_probabilities
from .inventory import Building, generate_inventory, load_inventory, write_inventory
from .knapsack import InspectionSelection, KnapsackInstance, brute_force, solve
from .simulation import (
    BudgetSweep,
    Community,
    HazardModel,
    Rates,
    budget_sweep,
    pareto_front,
    select_budgets,
)

__version__ = "0.1.0"

__all__ = [
    "Building",
    "BudgetSweep",
    "Community",
    "ConfigError",
    "CostConfig",
    "CostMatrix",
    "DomainError",
    "FragilityCurve",
    "HazardModel",
    "InspectRankError",
    "InspectionCostModel",
    "InspectionSelection",
    "KnapsackInstance",
    "ParseError",
    "PredeterminedDecision",
    "Rates",
    "SizeError",
    "StateProbabilities",
    "ValidationError",
    "brute_force",
    "budget_sweep",
    "decide_all",
    "evaluate",
    "generate_inventory",
    "load_inventory",
    "misprediction_cost",
    "optimal_decision",
    "pareto_front",
    "select_budgets",
    "solve",
    "state_probabilities",
    "write_inventory",
]
