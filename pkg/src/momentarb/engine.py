"""
Arbitrage verdicts and no-arbitrage price bounds from the moment relaxation.

Markets are rescaled so that the largest support bound is 1 before any
solve; every payoff is positively homogeneous, so bounds are mapped back by
the same factor.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np

from .conic import DEFAULT_TOL, ConicSolution, Status, solve_feasibility, solve_optimize
from .market import MarketInstance
from .moments import MomentProblem, assemble
from .payoffs import AbsLinear, Asset, call_price_from_straddle

__all__ = [
    "Verdict",
    "ArbitrageReport",
    "BoundResult",
    "Call",
    "ArbitrageError",
    "HierarchyError",
    "check_no_arbitrage",
    "price_bounds",
    "bound_vs_degree",
]

log = logging.getLogger(__name__)

# bound solves that stall within this multiple of tol are returned, flagged
REDUCED_ACCURACY = 100.0


class Verdict(str, Enum):
    ARBITRAGE = "arbitrage_detected"
    NO_ARBITRAGE_DETECTED = "no_arbitrage_detected_at_degree"
    MARGINAL = "marginal"


@dataclass(frozen=True)
class Call:
    """Basket call ``(a.x - K)^+``; bounded through the straddle ``|a.x - K|``."""

    coefficients: tuple[float, ...]
    strike: float
    name: str = ""

    @property
    def straddle(self) -> AbsLinear:
        return AbsLinear(self.coefficients, self.strike, self.name and f"straddle[{self.name}]")

    @property
    def label(self) -> str:
        return self.name or f"call{self.straddle.label}"

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.maximum(x @ np.asarray(self.coefficients, dtype=float) - self.strike, 0.0)


Target = Union[Asset, AbsLinear, Call]


@dataclass
class ArbitrageReport:
    verdict: Verdict
    degree: int
    margin: float
    beta: float
    block_dims: list[int]
    block_labels: list[str]
    moments: dict[str, float] = field(default_factory=dict)
    static_violations: list[str] = field(default_factory=list)
    solver: dict = field(default_factory=dict)
    note: str = ""

    @property
    def arbitrage(self) -> bool:
        return self.verdict is Verdict.ARBITRAGE


@dataclass
class BoundResult:
    target: str
    direction: str
    value: float
    degree: int
    straddle_value: Optional[float] = None
    pinned: bool = False
    solver: dict = field(default_factory=dict)


class ArbitrageError(RuntimeError):
    """The base market fails the relaxation, so price bounds are meaningless."""

    def __init__(self, report: ArbitrageReport):
        self.report = report
        super().__init__(f"base market is not certified feasible at degree {report.degree}: {report.verdict.value}")


class HierarchyError(RuntimeError):
    pass


def _normalized(market: MarketInstance) -> tuple[MarketInstance, float]:
    scale = max(market.support)
    return market.scaled(1.0 / scale), scale


def _solver_info(sol: ConicSolution) -> dict:
    return {
        "status": sol.status.value,
        "iterations": sol.iterations,
        "margin": sol.margin,
        "primal_residual": sol.primal_residual,
        "dual_residual": sol.dual_residual,
        "gap": sol.gap,
        "min_eigenvalue": min(sol.min_eigenvalues) if sol.min_eigenvalues else float("nan"),
        "message": sol.message,
    }


def relaxation(market: MarketInstance, degree: Optional[int] = None, target: Optional[AbsLinear] = None) -> MomentProblem:
    """Assembled relaxation for the normalized market (support scaled to max 1)."""
    norm, scale = _normalized(market)
    if target is not None:
        target = AbsLinear(target.coefficients, target.offset / scale, target.name)
    return assemble(norm, degree, target)


def check_no_arbitrage(
    market: MarketInstance,
    degree: Optional[int] = None,
    tol: float = DEFAULT_TOL,
    max_iter: Optional[int] = None,
    prescreen: bool = True,
) -> ArbitrageReport:
    """Test quoted prices against the degree-``d`` moment relaxation.

    A phase-I margin ``<= -tol`` means every degree-``d`` condition holds
    (``NO_ARBITRAGE_DETECTED``; finite ``d`` is necessary only, so this is
    not a no-arbitrage certificate). A margin ``>= tol`` certifies that no
    state-price measure matches the prices (``ARBITRAGE``). With
    ``prescreen``, price-range violations larger than ``tol`` (relative to
    the largest support bound) also certify arbitrage.
    """
    d = market.degree if degree is None else degree
    norm, scale = _normalized(market)
    problem = assemble(norm, d)
    sol = solve_feasibility(problem.to_conic(), tol=tol, max_iter=max_iter)
    verdict = {
        Status.FEASIBLE: Verdict.NO_ARBITRAGE_DETECTED,
        Status.INFEASIBLE: Verdict.ARBITRAGE,
    }.get(sol.status, Verdict.MARGINAL)
    static = market.static_violations(atol=tol * scale) if prescreen else []
    report = ArbitrageReport(
        verdict=verdict,
        degree=d,
        margin=sol.margin,
        beta=problem.beta.value * scale,
        block_dims=problem.dims,
        block_labels=[b.label for b in problem.blocks],
        static_violations=static,
        solver=_solver_info(sol),
    )
    if static:
        report.verdict = Verdict.ARBITRAGE
        report.note = "static price-range violation: " + "; ".join(static)
    elif verdict is Verdict.NO_ARBITRAGE_DETECTED:
        index = problem.index
        report.moments = {
            index.semigroup.label(e): index.value(e, sol.y) * scale ** e.degree for e in index.elements
        }
        report.note = f"prices satisfy all degree-{d} moment conditions; this is necessary, not sufficient"
    elif verdict is Verdict.ARBITRAGE:
        report.note = f"no price function satisfies the degree-{d} conditions; a static arbitrage exists"
    else:
        report.note = f"phase-I margin {sol.margin:.3g} is within tol {tol:g}; no verdict"
    return report


def _as_straddle(market: MarketInstance, target: Target) -> tuple[Union[Asset, AbsLinear], Optional[Call]]:
    if isinstance(target, Call):
        return target.straddle, target
    return target, None


def price_bounds(
    market: MarketInstance,
    target: Target,
    direction: str,
    degree: Optional[int] = None,
    tol: float = DEFAULT_TOL,
    max_iter: Optional[int] = None,
) -> BoundResult:
    """Upper or lower bound on the no-arbitrage price of ``target``.

    The target joins the semigroup as an unpriced generator and ``f(target)``
    is maximized (``direction="upper"``) or minimized over the relaxation.
    Call targets are bounded in straddle space and mapped back through
    ``c = (q - K + a.p) / 2``.

    Raises
    ------
    ArbitrageError
        If the base market is not certified feasible at this degree.
    """
    if direction not in ("upper", "lower"):
        raise ValueError(f"direction must be 'upper' or 'lower', got {direction!r}")
    d = market.degree if degree is None else degree
    report = check_no_arbitrage(market, d, tol=tol, max_iter=max_iter)
    if report.verdict is not Verdict.NO_ARBITRAGE_DETECTED:
        raise ArbitrageError(report)
    payoff, call = _as_straddle(market, target)

    def finish(straddle_value, pinned, solver):
        if call is not None:
            forward = float(np.dot(call.coefficients, market.prices))
            value = call_price_from_straddle(forward, call.strike, straddle_value)
            return BoundResult(call.label, direction, value, d, straddle_value, pinned, solver)
        return BoundResult(payoff.label, direction, straddle_value, d, None, pinned, solver)

    if isinstance(payoff, Asset):
        return finish(market.prices[payoff.index], True, {})
    if payoff.n_assets != market.n_assets:
        raise ValueError(f"target has {payoff.n_assets} coefficients for {market.n_assets} assets")
    for g, q in zip(market.derivatives, market.derivative_prices):
        if g.same_payoff(payoff):
            return finish(q, True, {})

    norm, scale = _normalized(market)
    problem = relaxation(market, d, payoff)
    index = problem.index
    slot = index.slot_of[index.semigroup.generator_element(index.semigroup.n_generators - 1)]
    c = np.zeros(index.n_slots)
    c[slot] = 1.0 if direction == "upper" else -1.0
    sol = solve_optimize(problem.to_conic(c), tol=tol, max_iter=max_iter)
    info = _solver_info(sol)
    if sol.status is Status.NUMERICAL_TROUBLE and _near_optimal(sol, REDUCED_ACCURACY * tol):
        info["accuracy"] = "reduced"
        log.warning("degree-%d bound solved to reduced accuracy: %s", d, sol.message)
    elif sol.status is not Status.OPTIMAL:
        raise RuntimeError(f"bound solve ended with status {sol.status.value}: {sol.message}")
    value = float(sol.y[slot]) * scale
    return finish(value, False, info)


def _near_optimal(sol: ConicSolution, tol: float) -> bool:
    scale = 1.0 + abs(sol.objective)
    return max(sol.primal_residual, sol.dual_residual) <= tol and sol.gap <= tol * scale


def bound_vs_degree(
    market: MarketInstance,
    target: Target,
    degrees: Sequence[int],
    tol: float = DEFAULT_TOL,
    atol: float = 1e-6,
) -> list[tuple[BoundResult, BoundResult]]:
    """(lower, upper) bounds for each degree, checked for monotone tightening.

    Raises
    ------
    HierarchyError
        If an upper bound increases or a lower bound decreases by more than
        ``atol`` as the degree grows.
    """
    degrees = list(degrees)
    if any(b <= a for a, b in zip(degrees, degrees[1:])):
        raise ValueError("degrees must be strictly increasing")
    out = []
    for d in degrees:
        try:
            lo = price_bounds(market, target, "lower", d, tol)
            up = price_bounds(market, target, "upper", d, tol)
        except Exception as exc:
            raise RuntimeError(f"bound computation failed at degree {d}: {exc}") from exc
        out.append((lo, up))
    for (lo0, up0), (lo1, up1), d in zip(out, out[1:], degrees[1:]):
        if up1.value > up0.value + atol or lo1.value < lo0.value - atol:
            raise HierarchyError(
                f"bounds widened at degree {d}: [{lo0.value:.9g}, {up0.value:.9g}] -> [{lo1.value:.9g}, {up1.value:.9g}]"
            )
    return out
