"""Best gain-loss ratios and their pricing-kernel duals on finite scenario trees."""

from .scenario_tree import Node, Payoff, ScenarioTree, Strategy, gain_vector, terminal_measure, validate_tree

__version__ = "0.1.0"

__all__ = [
    "Node",
    "Payoff",
    "ScenarioTree",
    "Strategy",
    "gain_vector",
    "terminal_measure",
    "validate_tree",
]
