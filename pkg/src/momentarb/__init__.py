"""Static-arbitrage detection and price bounds from moment relaxations over payoff semigroups."""
from .conic import Block, ConicProblem, ConicSolution, Status, solve_feasibility, solve_lp, solve_optimize
from .engine import (
    ArbitrageError,
    ArbitrageReport,
    BoundResult,
    Call,
    HierarchyError,
    Verdict,
    bound_vs_degree,
    check_no_arbitrage,
    price_bounds,
)
from .market import MarketInstance, MarketValidationError
from .martingale import convex_order_check, find_transition
from .moments import MomentProblem, assemble
from .oracle import DiscreteMeasure, Grid, GridCapError, oracle_bound, oracle_feasible
from .payoffs import AbsLinear, Asset, PayoffSemigroup, SemigroupElement

__version__ = "0.1.0"

__all__ = [
    "AbsLinear",
    "ArbitrageError",
    "ArbitrageReport",
    "Asset",
    "Block",
    "BoundResult",
    "Call",
    "ConicProblem",
    "ConicSolution",
    "DiscreteMeasure",
    "Grid",
    "GridCapError",
    "HierarchyError",
    "MarketInstance",
    "MarketValidationError",
    "MomentProblem",
    "PayoffSemigroup",
    "SemigroupElement",
    "Status",
    "Verdict",
    "assemble",
    "bound_vs_degree",
    "check_no_arbitrage",
    "convex_order_check",
    "find_transition",
    "oracle_bound",
    "oracle_feasible",
    "price_bounds",
    "solve_feasibility",
    "solve_lp",
    "solve_optimize",
]
