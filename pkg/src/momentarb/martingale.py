"""
Martingale transitions between two discrete marginals on a common support.

``find_transition`` solves the transport LP directly; ``convex_order_check``
tests the concave-function criterion. On finite scalar supports the two
verdicts coincide, which the test suite exploits as a cross-check.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .oracle import DiscreteMeasure

__all__ = ["TransitionMatrix", "ConvexOrderReport", "find_transition", "convex_order_check", "TRANSITION_TOL"]

TRANSITION_TOL = 1e-8
_HIGHS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic ``Q`` over ``points`` with ``sum_j Q_ij a_j = a_i`` for every row."""

    matrix: np.ndarray
    points: np.ndarray
    residual: float = 0.0

    def apply(self, weights) -> np.ndarray:
        return np.asarray(weights, dtype=float) @ self.matrix


@dataclass
class ConvexOrderReport:
    ordered: bool
    mean_gap: float
    worst_violation: float
    violations: list[float] = field(default_factory=list)


def _common_support(mu: DiscreteMeasure, nu: DiscreteMeasure) -> np.ndarray:
    if mu.points.shape != nu.points.shape or not np.allclose(mu.points, nu.points, rtol=0, atol=1e-12):
        raise ValueError("mu and nu must be given on the same list of support points")
    return mu.points


def find_transition(mu: DiscreteMeasure, nu: DiscreteMeasure, tol: float = TRANSITION_TOL) -> Optional[TransitionMatrix]:
    """A martingale transition ``Q`` with ``mu Q = nu``, or ``None`` if none exists.

    Rows where ``mu`` has no mass do not affect ``mu Q`` and are fixed to
    point masses. Marginal matching is solved as ``min |mu Q - nu|_inf``
    and accepted when the slack is at most ``tol``.
    """
    pts = _common_support(mu, nu)
    N, dim = pts.shape
    active = np.flatnonzero(mu.weights > 0)
    k = len(active)
    nvar = k * N + 1  # Q rows for active states, then the slack

    A_eq, b_eq = [], []
    for r, i in enumerate(active):
        row = np.zeros(nvar)
        row[r * N:(r + 1) * N] = 1.0
        A_eq.append(row)
        b_eq.append(1.0)
        for c in range(dim):
            row = np.zeros(nvar)
            row[r * N:(r + 1) * N] = pts[:, c]
            A_eq.append(row)
            b_eq.append(pts[i, c])

    # |sum_i mu_i Q_ij - nu_j| <= s
    M = np.zeros((N, nvar))
    for r, i in enumerate(active):
        M[:, r * N:(r + 1) * N] += mu.weights[i] * np.eye(N)
    A_ub = np.vstack([M, -M])
    A_ub[:, -1] = -1.0
    b_ub = np.concatenate([nu.weights, -nu.weights])

    cost = np.zeros(nvar)
    cost[-1] = 1.0
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=np.array(A_eq), b_eq=np.array(b_eq),
                  bounds=(0, None), method="highs", options=_HIGHS)
    if res.status == 2:
        return None
    if res.status != 0:
        raise RuntimeError(f"transition LP failed: {res.message}")
    slack = float(res.x[-1])
    if slack > tol:
        return None
    Q = np.eye(N)
    for r, i in enumerate(active):
        Q[i] = np.clip(res.x[r * N:(r + 1) * N], 0.0, None)
    return TransitionMatrix(Q, pts, slack)


def convex_order_check(mu: DiscreteMeasure, nu: DiscreteMeasure, tol: float = 1e-9) -> ConvexOrderReport:
    """Check ``E_mu[phi] >= E_nu[phi]`` for concave ``phi`` on a scalar support.

    Tests equal means and the kink functions ``min(x, K)`` for every support
    point ``K``, which suffices on a finite set of reals.
    """
    pts = _common_support(mu, nu)
    if pts.shape[1] != 1:
        raise ValueError("convex_order_check supports scalar supports only")
    x = pts[:, 0]
    mean_gap = float(mu.weights @ x - nu.weights @ x)
    gaps = [float(mu.weights @ np.minimum(x, K) - nu.weights @ np.minimum(x, K)) for K in np.unique(x)]
    violations = [-g for g in gaps if g < -tol]
    worst = max([0.0] + [-g for g in gaps])
    ordered = abs(mean_gap) <= tol and not violations
    return ConvexOrderReport(ordered, mean_gap, worst, violations)
