"""
Brute-force ground truth on a discretized support.

The state-price measure is restricted to a finite grid on ``[0, B]^n`` and
price matching becomes a linear program in the grid weights. The LPs are
solved with SciPy's HiGHS, independently of the interior-point code used by
the relaxation, so the two can be checked against each other.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .market import MarketInstance
from .payoffs import AbsLinear, Asset, PayoffSemigroup, SemigroupElement

__all__ = [
    "DiscreteMeasure",
    "Grid",
    "OracleResult",
    "GridCapError",
    "oracle_feasible",
    "oracle_bound",
    "moments_from_measure",
    "FEASIBILITY_THRESHOLD",
    "MAX_GRID_POINTS",
]

FEASIBILITY_THRESHOLD = 1e-8
MAX_GRID_POINTS = 10**6
_HIGHS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


@dataclass(frozen=True)
class DiscreteMeasure:
    """Probability weights on finitely many points of ``R^n``."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.asarray(self.weights, dtype=float)
        if pts.ndim != 2 or w.shape != (pts.shape[0],):
            raise ValueError("need one weight per support point")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {w.sum():.12g}, not 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def expect(self, payoff) -> float:
        return float(self.weights @ np.asarray(payoff(self.points), dtype=float))

    def mean(self) -> np.ndarray:
        return self.weights @ self.points


class GridCapError(ValueError):
    def __init__(self, n_points: int, cap: int):
        self.n_points = n_points
        super().__init__(f"grid has {n_points} points, above the cap of {cap}")


@dataclass(frozen=True)
class Grid:
    """Uniform ``L``-point axes on ``[0, B_i]``, optionally augmented with kink locations."""

    axes: tuple[np.ndarray, ...]

    @classmethod
    def uniform(cls, upper: Sequence[float], L: int, extra: Optional[Sequence[Sequence[float]]] = None) -> "Grid":
        if L < 2:
            raise ValueError("a grid needs at least 2 points per axis")
        axes = []
        for i, b in enumerate(upper):
            ax = np.linspace(0.0, b, L)
            if extra is not None and len(extra[i]):
                pts = np.asarray(extra[i], dtype=float)
                ax = np.concatenate([ax, pts[(pts >= 0) & (pts <= b)]])
            axes.append(np.unique(ax))
        return cls(tuple(axes))

    @classmethod
    def for_market(cls, market: MarketInstance, L: int, targets=()) -> "Grid":
        """Uniform grid plus every axis-aligned kink of the market's abs payoffs."""
        extra: list[list[float]] = [[] for _ in range(market.n_assets)]
        for g in list(market.derivatives) + [t for t in targets if hasattr(t, "coefficients")]:
            nz = [i for i, c in enumerate(g.coefficients) if c != 0]
            if len(nz) == 1:
                i = nz[0]
                k = getattr(g, "offset", getattr(g, "strike", None))
                extra[i].append(k / g.coefficients[i])
        return cls.uniform(market.support, L, extra)

    @property
    def n_points(self) -> int:
        return int(np.prod([len(a) for a in self.axes]))

    def points(self, cap: int = MAX_GRID_POINTS) -> np.ndarray:
        if self.n_points > cap:
            raise GridCapError(self.n_points, cap)
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


@dataclass
class OracleResult:
    feasible: bool
    slack: float
    n_points: int
    measure: Optional[DiscreteMeasure] = None
    value: Optional[float] = None


def _constraints(market: MarketInstance, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rows = [pts[:, i] for i in range(market.n_assets)]
    rows += [g(pts) for g in market.derivatives]
    targets = list(market.prices) + list(market.derivative_prices)
    return np.array(rows), np.array(targets)


def _min_slack(A: np.ndarray, b: np.ndarray) -> tuple[float, Optional[np.ndarray]]:
    """min s  s.t.  |A w - b|_inf <= s,  sum w = 1,  w >= 0."""
    k, N = A.shape
    ones = np.ones((k, 1))
    A_ub = np.block([[A, -ones], [-A, -ones]])
    b_ub = np.concatenate([b, -b])
    A_eq = np.concatenate([np.ones((1, N)), np.zeros((1, 1))], axis=1)
    c = np.zeros(N + 1)
    c[-1] = 1.0
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0], bounds=(0, None), method="highs", options=_HIGHS)
    if res.status != 0:
        raise RuntimeError(f"oracle LP failed: {res.message}")
    return float(res.x[-1]), res.x[:-1]


def _measure(pts: np.ndarray, w: np.ndarray) -> DiscreteMeasure:
    w = np.clip(w, 0.0, None)
    keep = w > 1e-12
    w = w[keep]
    return DiscreteMeasure(pts[keep], w / w.sum())


def oracle_feasible(market: MarketInstance, L: int, cap: int = MAX_GRID_POINTS) -> OracleResult:
    """Find grid weights reproducing every quoted price within ``FEASIBILITY_THRESHOLD``.

    Raises
    ------
    GridCapError
        If the (augmented) grid has more than ``cap`` points.
    """
    pts = Grid.for_market(market, L).points(cap)
    A, b = _constraints(market, pts)
    slack, w = _min_slack(A, b)
    if slack > FEASIBILITY_THRESHOLD:
        return OracleResult(False, slack, len(pts))
    return OracleResult(True, slack, len(pts), _measure(pts, w))


def _payoff(target):
    if isinstance(target, (Asset, AbsLinear)) or callable(target):
        return target
    raise TypeError(f"unsupported target {target!r}")


def oracle_bound(market: MarketInstance, target, direction: str, L: int, cap: int = MAX_GRID_POINTS) -> OracleResult:
    """Extreme expected target payoff over grid measures matching the prices.

    ``target`` is any payoff callable on an ``(N, n)`` point array (an
    :class:`Asset`, :class:`AbsLinear` or basket call). Restricting to a grid
    shrinks the feasible set, so the result is an inner bound: below the
    true supremum for ``"upper"``, above the true infimum for ``"lower"``.
    """
    if direction not in ("upper", "lower"):
        raise ValueError(f"direction must be 'upper' or 'lower', got {direction!r}")
    pts = Grid.for_market(market, L, targets=[target]).points(cap)
    A, b = _constraints(market, pts)
    slack, _ = _min_slack(A, b)
    if slack > FEASIBILITY_THRESHOLD:
        raise ValueError(f"prices are not matched on this grid (slack {slack:.3g})")
    band = slack + 1e-12
    values = np.asarray(_payoff(target)(pts), dtype=float)
    sign = -1.0 if direction == "upper" else 1.0
    N = len(pts)
    res = linprog(
        sign * values,
        A_ub=np.vstack([A, -A]), b_ub=np.concatenate([b + band, -b + band]),
        A_eq=np.ones((1, N)), b_eq=[1.0], bounds=(0, None), method="highs", options=_HIGHS,
    )
    if res.status != 0:
        raise RuntimeError(f"oracle bound LP failed: {res.message}")
    return OracleResult(True, slack, N, _measure(pts, res.x), float(values @ res.x))


def moments_from_measure(measure: DiscreteMeasure, semigroup: PayoffSemigroup, elements: Sequence[SemigroupElement]) -> np.ndarray:
    """``E_mu[s(x)]`` for each element ``s``."""
    return np.array([measure.weights @ semigroup.evaluate(e, measure.points) for e in elements])
