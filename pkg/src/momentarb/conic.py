"""
Dense block-diagonal semidefinite programming.

Problems are posed over a vector ``y`` with one linear matrix inequality
per block::

    maximize    c . y
    subject to  F0_j + sum_k y_k F_jk  >= 0      (PSD, or entrywise for diagonal blocks)

Internally this is the dual of the standard pair

    (P)  min <C, X>   s.t.  <A_k, X> = b_k,  X >= 0
    (D)  max b . y    s.t.  Z = C - sum_k y_k A_k >= 0

with ``C = F0``, ``A_k = -F_k``, ``b = c``. The pair is solved by an
infeasible-start primal-dual path-following method using the HKM search
direction with a Mehrotra predictor-corrector step. Every ``y`` is wrapped
in a box ``|y_k| <= box`` so that both sides stay strictly feasible; an
active box is reported as ``UNBOUNDED``.
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linprog

__all__ = [
    "Block",
    "ConicProblem",
    "ConicSolution",
    "LpSolution",
    "Status",
    "min_eigenvalue",
    "solve_feasibility",
    "solve_optimize",
    "solve_lp",
    "dump_problem",
    "DEFAULT_TOL",
    "DEFAULT_MAX_ITER",
]

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 200
DEFAULT_BOX = 1e4
MAX_ITER_ENV = "MOMENTARB_MAX_ITER"


class Status(str, Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    OPTIMAL = "optimal"
    UNBOUNDED = "unbounded"
    NUMERICAL_TROUBLE = "numerical_trouble"


@dataclass(frozen=True)
class Block:
    """One constraint ``constant + sum_k y_k coefficients[k] >= 0``.

    Dense blocks hold ``(p, p)`` symmetric matrices; diagonal blocks hold
    length-``p`` vectors and mean entrywise nonnegativity.
    """

    constant: np.ndarray
    coefficients: np.ndarray
    diagonal: bool = False
    label: str = ""

    def __post_init__(self):
        c = np.asarray(self.constant, dtype=float)
        f = np.asarray(self.coefficients, dtype=float)
        if self.diagonal:
            if c.ndim != 1 or f.ndim != 2 or f.shape[1] != c.shape[0]:
                raise ValueError(f"diagonal block {self.label!r}: expected (p,) and (m, p) arrays")
        else:
            if c.ndim != 2 or c.shape[0] != c.shape[1]:
                raise ValueError(f"block {self.label!r}: constant must be square")
            if f.ndim != 3 or f.shape[1:] != c.shape:
                raise ValueError(f"block {self.label!r}: coefficient matrices must match the constant's shape")
            if not np.allclose(c, c.T) or not np.allclose(f, f.transpose(0, 2, 1)):
                raise ValueError(f"block {self.label!r} is not symmetric")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(f))):
            raise ValueError(f"block {self.label!r} has non-finite entries")
        object.__setattr__(self, "constant", c)
        object.__setattr__(self, "coefficients", f)

    @property
    def dim(self) -> int:
        return self.constant.shape[0]

    @property
    def n_vars(self) -> int:
        return self.coefficients.shape[0]

    def at(self, y) -> np.ndarray:
        return self.constant + np.tensordot(np.asarray(y, dtype=float), self.coefficients, axes=1)

    def min_eigenvalue(self, y) -> float:
        v = self.at(y)
        return float(v.min()) if self.diagonal else min_eigenvalue(v)


@dataclass
class ConicProblem:
    n_vars: int
    blocks: list[Block]
    objective: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.blocks:
            raise ValueError("problem has no blocks")
        for b in self.blocks:
            if b.n_vars != self.n_vars:
                raise ValueError(f"block {b.label!r} has {b.n_vars} coefficient matrices, expected {self.n_vars}")
        if self.objective is not None:
            self.objective = np.asarray(self.objective, dtype=float)
            if self.objective.shape != (self.n_vars,):
                raise ValueError("objective length must equal n_vars")

    def min_eigenvalues(self, y) -> list[float]:
        return [b.min_eigenvalue(y) for b in self.blocks]


@dataclass
class ConicSolution:
    status: Status
    y: np.ndarray
    objective: float = float("nan")
    margin: float = float("nan")
    primal_residual: float = float("nan")
    dual_residual: float = float("nan")
    gap: float = float("nan")
    iterations: int = 0
    min_eigenvalues: list[float] = field(default_factory=list)
    message: str = ""


@dataclass
class LpSolution:
    status: Status
    x: np.ndarray
    objective: float = float("nan")
    duals: Optional[np.ndarray] = None
    iterations: int = 0
    message: str = ""


def min_eigenvalue(matrix) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    a = np.asarray(matrix, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if a.size == 0:
        return float("inf")
    return float(np.linalg.eigvalsh(0.5 * (a + a.T))[0])


def _max_iter(max_iter: Optional[int]) -> int:
    if max_iter is not None:
        return max_iter
    env = os.environ.get(MAX_ITER_ENV)
    return int(env) if env else DEFAULT_MAX_ITER


# ---------------------------------------------------------------------------
# Standard-form primal-dual interior point


@dataclass
class _Standard:
    C: list[np.ndarray]
    A: list[np.ndarray]
    diag: list[bool]
    b: np.ndarray
    box: Optional[float] = None  # last block is the |y| <= box safeguard


@dataclass
class _IpmResult:
    converged: bool
    X: list[np.ndarray]
    y: np.ndarray
    Z: list[np.ndarray]
    pobj: float
    dobj: float
    relp: float
    reld: float
    relgap: float
    iterations: int
    message: str = ""


def _aop(std: _Standard, W: Sequence[np.ndarray]) -> np.ndarray:
    out = np.zeros(std.b.shape[0])
    for A, w, dg in zip(std.A, W, std.diag):
        out += A @ w if dg else A.reshape(A.shape[0], -1) @ w.ravel()
    return out


def _atop(std: _Standard, y: np.ndarray) -> list[np.ndarray]:
    return [A.T @ y if dg else np.tensordot(y, A, axes=1) for A, dg in zip(std.A, std.diag)]


def _inner(U: Sequence[np.ndarray], V: Sequence[np.ndarray]) -> float:
    return float(sum(np.vdot(u, v) for u, v in zip(U, V)))


def _norm(U: Sequence[np.ndarray]) -> float:
    return float(np.sqrt(sum(np.vdot(u, u) for u in U)))


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def _max_step(x: np.ndarray, dx: np.ndarray, diagonal: bool) -> float:
    """Largest ``a`` keeping ``x + a dx`` PSD (or nonnegative)."""
    if diagonal:
        neg = dx < 0
        return float(np.min(-x[neg] / dx[neg])) if np.any(neg) else np.inf
    L = np.linalg.cholesky(x)
    w = sla.solve_triangular(L, dx, lower=True)
    w = sla.solve_triangular(L, w.T, lower=True)
    lam = np.linalg.eigvalsh(_sym(w))[0]
    return -1.0 / lam if lam < 0 else np.inf


def _stop(best: _IpmResult, message: str) -> _IpmResult:
    best.message = f"{message}; best residuals p={best.relp:.2e} d={best.reld:.2e} gap={best.relgap:.2e}"
    return best


def _interior_point(std: _Standard, tol: float, max_iter: int, diverge: float = 1e12, refine: int = 1) -> _IpmResult:
    m = std.b.shape[0]
    dims = [C.shape[0] for C in std.C]
    n_total = sum(dims)
    norm_b = float(np.linalg.norm(std.b))
    norm_C = _norm(std.C)

    X, Z = [], []
    n_blocks = len(std.C) - (1 if std.box is not None else 0)
    for C, A, dg, p in zip(std.C[:n_blocks], std.A, std.diag, dims):
        a_norms = np.sqrt((A.reshape(m, -1) ** 2).sum(axis=1)) if m else np.zeros(0)
        xi = max(10.0, np.sqrt(p), float(np.max(p * (1 + np.abs(std.b)) / (1 + a_norms))) if m else 0.0)
        eta = max(10.0, np.sqrt(p), (1 + max(float(np.linalg.norm(C)), float(a_norms.max()) if m else 0.0)) / np.sqrt(p))
        X.append(np.full(p, xi) if dg else xi * np.eye(p))
        Z.append(np.full(p, eta) if dg else eta * np.eye(p))
    if std.box is not None:
        # y = 0 makes the box slack exactly feasible
        X.append(np.ones(2 * m))
        Z.append(np.full(2 * m, std.box))
    y = np.zeros(m)

    res = best = None
    best_score = np.inf
    stall = 0
    for it in range(max_iter + 1):
        aty = _atop(std, y)
        Rd = [C - z - a for C, z, a in zip(std.C, Z, aty)]
        rp = std.b - _aop(std, X)
        pobj = _inner(std.C, X)
        dobj = float(std.b @ y)
        mu = _inner(X, Z) / n_total
        relp = float(np.linalg.norm(rp)) / (1 + norm_b)
        reld = _norm(Rd) / (1 + norm_C)
        relgap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        res = _IpmResult(False, X, y, Z, pobj, dobj, relp, reld, relgap, it)
        score = max(relp, reld, relgap)
        # absolute gap, unless the objective is too large for it to be reachable
        gap_ok = abs(pobj - dobj) <= max(tol, 1e-12 * (abs(pobj) + abs(dobj)))
        if relp <= tol and reld <= tol and gap_ok:
            res.converged = True
            return res
        if score < 0.5 * best_score:
            stall = 0
        else:
            stall += 1
        if score < best_score:
            best, best_score = res, score
        if it == max_iter:
            return _stop(best, "iteration cap reached")
        if np.linalg.norm(y) > diverge or _norm(X) > diverge:
            res.message = "iterates diverged"
            return res
        if stall >= 8:
            return _stop(best, "progress stalled")

        try:
            Zinv = [1.0 / z if dg else sla.cho_solve(sla.cho_factor(z), np.eye(len(z))) for z, dg in zip(Z, std.diag)]
        except np.linalg.LinAlgError:
            return _stop(best, "dual slack became singular")
        Zinv = [zi if dg else _sym(zi) for zi, dg in zip(Zinv, std.diag)]
        M = np.zeros((m, m))
        for A, x, zi, dg in zip(std.A, X, Zinv, std.diag):
            if dg:
                M += (A * (x * zi)) @ A.T
            else:
                G = x @ A @ zi
                M += A.reshape(m, -1) @ G.transpose(0, 2, 1).reshape(m, -1).T
        M = _sym(M)
        try:
            factor = sla.cho_factor(M)
        except np.linalg.LinAlgError:
            ridge = 1e-14 * max(1.0, float(np.trace(M)) / max(m, 1))
            try:
                factor = sla.cho_factor(M + ridge * np.eye(m))
            except np.linalg.LinAlgError:
                return _stop(best, "Schur complement is not positive definite")
        XRdZinv = [x * r * zi if dg else x @ r @ zi for x, r, zi, dg in zip(X, Rd, Zinv, std.diag)]
        XRdZinv = [w if dg else _sym(w) for w, dg in zip(XRdZinv, std.diag)]
        base = rp + _aop(std, XRdZinv)

        def direction(rc_zinv):
            dy = sla.cho_solve(factor, base - _aop(std, rc_zinv))
            for _ in range(refine + 1):
                dZ = [r - a for r, a in zip(Rd, _atop(std, dy))]
                dX = []
                for rz, x, dz, zi, dg in zip(rc_zinv, X, dZ, Zinv, std.diag):
                    dX.append(rz - x * dz * zi if dg else _sym(rz - x @ dz @ zi))
                # one correction of A(dX) = rp recovers accuracy lost in an ill-conditioned M
                err = rp - _aop(std, dX)
                dy = dy + sla.cho_solve(factor, err)
            dZ = [r - a for r, a in zip(Rd, _atop(std, dy))]
            dX = []
            for rz, x, dz, zi, dg in zip(rc_zinv, X, dZ, Zinv, std.diag):
                dX.append(rz - x * dz * zi if dg else _sym(rz - x @ dz @ zi))
            return dX, dy, dZ

        def steps(dX, dZ, gamma):
            try:
                ap = min(_max_step(x, d, dg) for x, d, dg in zip(X, dX, std.diag))
                ad = min(_max_step(z, d, dg) for z, d, dg in zip(Z, dZ, std.diag))
            except np.linalg.LinAlgError:
                return None
            return min(1.0, gamma * ap), min(1.0, gamma * ad)

        # predictor
        dXp, dyp, dZp = direction([-x for x in X])
        st = steps(dXp, dZp, 1.0)
        if st is None:
            return _stop(best, "lost positive definiteness")
        ap, ad = st
        mu_aff = _inner([x + ap * d for x, d in zip(X, dXp)], [z + ad * d for z, d in zip(Z, dZp)]) / n_total
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0

        # corrector
        rc = []
        for x, zi, dx, dz, dg in zip(X, Zinv, dXp, dZp, std.diag):
            if dg:
                rc.append(sigma * mu * zi - x - dx * dz * zi)
            else:
                rc.append(sigma * mu * zi - x - dx @ dz @ zi)
        dX, dy, dZ = direction(rc)
        gamma = 0.9 + 0.09 * min(ap, ad)
        st = steps(dX, dZ, gamma)
        if st is None:
            return _stop(best, "lost positive definiteness")
        ap, ad = st
        X = [x + ap * d for x, d in zip(X, dX)]
        y = y + ad * dy
        Z = [z + ad * d for z, d in zip(Z, dZ)]
    return res


# ---------------------------------------------------------------------------
# Problem-level entry points


def _to_standard(problem: ConicProblem, b: np.ndarray, box: float, phase_one: bool) -> _Standard:
    m = problem.n_vars + (1 if phase_one else 0)
    C, A, diag = [], [], []
    for blk in problem.blocks:
        F = -blk.coefficients
        if phase_one:
            extra = -np.ones((1, blk.dim)) if blk.diagonal else -np.eye(blk.dim)[None]
            F = np.concatenate([F, extra], axis=0)
        C.append(blk.constant)
        A.append(F)
        diag.append(blk.diagonal)
    if m:
        C.append(np.full(2 * m, box))
        A.append(np.hstack([np.eye(m), -np.eye(m)]))
        diag.append(True)
    return _Standard(C, A, diag, np.asarray(b, dtype=float), box if m else None)


def _check_tol(tol: float):
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")


def solve_feasibility(
    problem: ConicProblem,
    tol: float = DEFAULT_TOL,
    max_iter: Optional[int] = None,
    box: float = DEFAULT_BOX,
) -> ConicSolution:
    """Phase-I: minimize ``t`` subject to ``F_j(y) + t I >= 0`` for every block.

    The returned ``margin`` is the verified ``t`` at the returned ``y``,
    ``-min_j lambda_min(F_j(y))``. ``FEASIBLE`` when ``margin <= -tol``,
    ``INFEASIBLE`` when the optimum is ``>= tol``, otherwise
    ``NUMERICAL_TROUBLE``.
    """
    _check_tol(tol)
    m = problem.n_vars
    b = np.zeros(m + 1)
    b[-1] = -1.0
    std = _to_standard(problem, b, box, phase_one=True)
    res = _interior_point(std, tol=0.1 * tol, max_iter=_max_iter(max_iter))
    y = res.y[:m].copy()
    eigs = problem.min_eigenvalues(y)
    margin = -min(eigs)
    lower = -res.pobj  # primal objective bounds -t from above
    sol = ConicSolution(
        Status.NUMERICAL_TROUBLE, y, objective=margin, margin=margin,
        primal_residual=res.relp, dual_residual=res.reld, gap=abs(res.pobj - res.dobj),
        iterations=res.iterations, min_eigenvalues=eigs, message=res.message,
    )
    if margin <= -tol:
        sol.status = Status.FEASIBLE
    elif res.converged and lower >= tol:
        sol.status = Status.INFEASIBLE
    elif res.converged:
        sol.message = f"phase-I optimum {margin:.3g} lies inside the marginal band |t| < {tol:g}"
    return sol


def solve_optimize(
    problem: ConicProblem,
    tol: float = DEFAULT_TOL,
    max_iter: Optional[int] = None,
    box: float = DEFAULT_BOX,
    check_feasibility: bool = True,
) -> ConicSolution:
    """Maximize ``objective . y`` subject to every block being PSD.

    Runs :func:`solve_feasibility` first unless ``check_feasibility`` is
    false; an infeasible problem comes back with status ``INFEASIBLE``.
    """
    _check_tol(tol)
    if problem.objective is None:
        raise ValueError("problem has no objective")
    if check_feasibility:
        feas = solve_feasibility(problem, tol=tol, max_iter=max_iter, box=box)
        if feas.status is not Status.FEASIBLE:
            return feas
    if problem.n_vars == 0:
        eigs = problem.min_eigenvalues(np.zeros(0))
        status = Status.OPTIMAL if min(eigs) >= -tol else Status.INFEASIBLE
        return ConicSolution(status, np.zeros(0), 0.0, gap=0.0, min_eigenvalues=eigs)
    std = _to_standard(problem, problem.objective, box, phase_one=False)
    res = _interior_point(std, tol=tol, max_iter=_max_iter(max_iter))
    y = res.y.copy()
    eigs = problem.min_eigenvalues(y)
    sol = ConicSolution(
        Status.NUMERICAL_TROUBLE, y, objective=float(problem.objective @ y) if problem.n_vars else 0.0,
        primal_residual=res.relp, dual_residual=res.reld, gap=abs(res.pobj - res.dobj),
        iterations=res.iterations, min_eigenvalues=eigs, message=res.message,
    )
    if res.converged:
        if problem.n_vars and np.max(np.abs(y)) >= 0.99 * box:
            sol.status = Status.UNBOUNDED
            sol.message = f"solution reached the |y| <= {box:g} safeguard box"
        else:
            sol.status = Status.OPTIMAL
    return sol


def solve_lp(
    A_eq,
    b_eq,
    c,
    tol: float = DEFAULT_TOL,
    maximize: bool = False,
    method: str = "ipm",
    max_iter: Optional[int] = None,
    A_ub=None,
    b_ub=None,
) -> LpSolution:
    """Solve ``min c.w`` (or max) subject to ``A_eq w = b_eq``, ``A_ub w <= b_ub``, ``w >= 0``.

    ``method="ipm"`` runs the same interior-point code as the SDP path with
    a single diagonal block; ``method="highs"`` calls SciPy's HiGHS solver.
    Inequality rows are only supported by HiGHS.
    """
    _check_tol(tol)
    c = np.asarray(c, dtype=float)
    sign = -1.0 if maximize else 1.0
    A = np.asarray(A_eq, dtype=float).reshape(-1, c.shape[0]) if A_eq is not None else np.zeros((0, c.shape[0]))
    b = np.asarray(b_eq, dtype=float).reshape(-1) if b_eq is not None else np.zeros(0)
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
        raise ValueError("LP data must be finite")
    if method == "highs":
        res = linprog(
            sign * c, A_ub=A_ub, b_ub=b_ub, A_eq=A if len(b) else None, b_eq=b if len(b) else None,
            bounds=(0, None), method="highs",
            options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
        )
        status = {0: Status.OPTIMAL, 2: Status.INFEASIBLE, 3: Status.UNBOUNDED}.get(res.status, Status.NUMERICAL_TROUBLE)
        x = res.x if res.x is not None else np.full(c.shape, np.nan)
        duals = getattr(res.eqlin, "marginals", None) if res.status == 0 else None
        return LpSolution(status, x, sign * res.fun if res.status == 0 else float("nan"), duals, res.nit, res.message)
    if method != "ipm":
        raise ValueError(f"unknown LP method {method!r}")
    if A_ub is not None:
        raise ValueError("inequality rows need method='highs'")
    std = _Standard([sign * c], [A], [True], b)
    res = _interior_point(std, tol=tol, max_iter=_max_iter(max_iter), diverge=1e10)
    x = res.X[0]
    if res.converged:
        status = Status.OPTIMAL
    elif res.message == "iterates diverged":
        status = Status.INFEASIBLE if np.linalg.norm(res.y) > 1e10 else Status.UNBOUNDED
    else:
        status = Status.NUMERICAL_TROUBLE
    return LpSolution(status, x, float(c @ x), res.y, res.iterations, res.message)


def dump_problem(problem: ConicProblem, path) -> None:
    """Write ``problem`` as plain text for cross-checking with external solvers.

    Format: ``vars <m>`` and ``objective`` lines, then per block a header
    ``block <j> <dense|diag> <p>`` followed by one line per matrix
    (constant first, then each ``F_k``) holding the row-major lower
    triangle (or the diagonal).
    """
    c = problem.objective if problem.objective is not None else np.zeros(problem.n_vars)
    lines = [f"vars {problem.n_vars}", "objective " + " ".join(repr(float(v)) for v in c)]
    for j, blk in enumerate(problem.blocks):
        kind = "diag" if blk.diagonal else "dense"
        lines.append(f"block {j} {kind} {blk.dim}")
        for mat in [blk.constant, *blk.coefficients]:
            vals = mat if blk.diagonal else mat[np.tril_indices(blk.dim)]
            lines.append(" ".join(repr(float(v)) for v in vals))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
