"""Quantal response equilibrium toolkit.

Solvers and verifiers for logistic and structural quantal response
equilibria of finite normal-form games: fixed-point iteration, precision
path tracing, perturbation-based quantal response functions (quadrature and
Monte Carlo), a permutation-dice enumeration oracle, and exclusion
certificates for payoff-monotone equilibria.
"""

__version__ = "0.1.0"

from .game import (
    Game,
    OrdinalComparison,
    StrategyProfile,
    build_paradox_game,
    build_prism_game,
    compare_ordinal,
    expected_utilities,
    expected_utility,
    is_nash,
    is_payoff_monotone,
)
from .solver import ConvergenceError, SolverConfig

__all__ = [
    "__version__",
    "Game",
    "StrategyProfile",
    "OrdinalComparison",
    "ConvergenceError",
    "SolverConfig",
    "build_paradox_game",
    "build_prism_game",
    "compare_ordinal",
    "expected_utilities",
    "expected_utility",
    "is_nash",
    "is_payoff_monotone",
]
