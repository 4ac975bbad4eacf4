"""
Truncated moment and localizing matrices over the payoff semigroup.

A candidate price function ``f`` is represented by one unknown per
canonical element of degree ``<= 2d``, except for the pinned ones:
``f(1) = 1`` and ``f(e_i) = p_i`` for every quoted generator. Every matrix
cell ``f(s*t)`` is canonicalized into an affine expression in those
unknowns.

Blocks built here, for basis elements ``s, t``:

* moment:      ``f(s t)``,                         ``deg s, t <= d``
* localizing:  ``f(e_i s t)`` for each generator,  ``deg s, t <= d - 1``
* beta:        ``beta f(s t) - sum_i f(e_i s t)``, ``deg s, t <= d - 1``
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .conic import Block, ConicProblem
from .market import MarketInstance
from .payoffs import AbsLinear, PayoffSemigroup, SemigroupElement

__all__ = [
    "AffineExpr",
    "MomentIndex",
    "LmiBlock",
    "BetaBound",
    "MomentProblem",
    "build_moment_matrix",
    "build_localizing_matrix",
    "build_beta_matrix",
    "assemble",
    "MAX_ELEMENTS",
]

MAX_ELEMENTS = 5000


@dataclass(frozen=True)
class AffineExpr:
    """``constant + sum(coef * y[slot])``."""

    constant: float = 0.0
    terms: tuple[tuple[int, float], ...] = ()

    def evaluate(self, y) -> float:
        return self.constant + sum(c * y[k] for k, c in self.terms)


class MomentIndex:
    """Slots for the unknown prices of canonical elements of degree ``<= max_degree``.

    Parameters
    ----------
    semigroup : PayoffSemigroup
    max_degree : int
        Largest element degree, ``2d``.
    pinned : mapping
        Known prices; the identity is always pinned to 1.
    """

    def __init__(self, semigroup: PayoffSemigroup, max_degree: int, pinned: Mapping[SemigroupElement, float]):
        self.semigroup = semigroup
        self.max_degree = max_degree
        self.elements = semigroup.enumerate(max_degree)
        if len(self.elements) > MAX_ELEMENTS:
            raise ValueError(
                f"relaxation needs {len(self.elements)} semigroup elements, above the limit of {MAX_ELEMENTS}; "
                "lower the degree or the number of derivatives"
            )
        self.pinned = {semigroup.identity(): 1.0}
        self.pinned.update({e: float(v) for e, v in pinned.items()})
        self.slots = [e for e in self.elements if e not in self.pinned]
        self.slot_of = {e: k for k, e in enumerate(self.slots)}

    @property
    def n_slots(self) -> int:
        return len(self.slots)

    def expr(self, exponents) -> AffineExpr:
        """Affine expression for ``f`` of a raw generator product."""
        const = 0.0
        terms: dict[int, float] = {}
        for atom, c in self.semigroup.expand(exponents).items():
            if atom.degree > self.max_degree:
                raise RuntimeError(f"element {self.semigroup.label(atom)} lies outside the enumerated range")
            if atom in self.pinned:
                const += c * self.pinned[atom]
            else:
                k = self.slot_of[atom]
                terms[k] = terms.get(k, 0.0) + c
        return AffineExpr(const, tuple(sorted((k, c) for k, c in terms.items() if c != 0.0)))

    def value(self, element: SemigroupElement, y) -> float:
        if element in self.pinned:
            return self.pinned[element]
        return float(y[self.slot_of[element]])

    def assignment(self, moments: Callable[[SemigroupElement], float] | Mapping[SemigroupElement, float]) -> np.ndarray:
        """Slot vector from a price function (e.g. expectations under a measure)."""
        get = moments.__getitem__ if isinstance(moments, Mapping) else moments
        return np.array([float(get(e)) for e in self.slots])

    def labelled(self, y) -> dict[str, float]:
        return {self.semigroup.label(e): self.value(e, y) for e in self.elements}


@dataclass(frozen=True)
class LmiBlock:
    """Symmetric matrix ``constant + sum_k y_k coefficients[k]``, indexed by ``basis``."""

    label: str
    basis: tuple[SemigroupElement, ...]
    constant: np.ndarray
    coefficients: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.basis)

    def cell(self, i: int, j: int) -> AffineExpr:
        col = self.coefficients[:, i, j]
        nz = np.flatnonzero(col)
        return AffineExpr(float(self.constant[i, j]), tuple((int(k), float(col[k])) for k in nz))

    def evaluate(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return self.constant + np.tensordot(y, self.coefficients, axes=1)

    def to_block(self) -> Block:
        return Block(self.constant, self.coefficients, label=self.label)


def _block(label: str, index: MomentIndex, basis, cell: Callable[[SemigroupElement, SemigroupElement], AffineExpr]) -> LmiBlock:
    k = len(basis)
    const = np.zeros((k, k))
    coeffs = np.zeros((index.n_slots, k, k))
    for i in range(k):
        for j in range(i, k):
            e = cell(basis[i], basis[j])
            const[i, j] = const[j, i] = e.constant
            for s, c in e.terms:
                coeffs[s, i, j] = coeffs[s, j, i] = c
    return LmiBlock(label, tuple(basis), const, coeffs)


def _basis(index: MomentIndex, degree: int) -> list[SemigroupElement]:
    return [e for e in index.elements if e.degree <= degree]


def build_moment_matrix(index: MomentIndex, d: int) -> LmiBlock:
    """Moment matrix ``[f(s t)]`` over canonical elements of degree ``<= d``."""
    if 2 * d > index.max_degree:
        raise ValueError("index does not cover degree 2d")
    return _block("moment", index, _basis(index, d), lambda s, t: index.expr(s * t))


def build_localizing_matrix(index: MomentIndex, generator: int, d: int) -> LmiBlock:
    """Localizing matrix ``[f(e_i s t)]`` over elements of degree ``<= d - 1``."""
    sg = index.semigroup
    e_i = sg.generator_element(generator)
    label = f"localizing[{sg.generators[generator].label}]"
    if d == 0:
        return _block(label, index, [sg.identity()], lambda s, t: index.expr(e_i))
    return _block(label, index, _basis(index, d - 1), lambda s, t: index.expr(e_i * s * t))


def build_beta_matrix(index: MomentIndex, beta: float, d: int) -> LmiBlock:
    """Support block ``[beta f(s t) - sum_i f(e_i s t)]`` over elements of degree ``<= d - 1``."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    sg = index.semigroup
    gens = [sg.generator_element(i) for i in range(sg.n_generators)]

    def cell(s, t):
        st = s * t
        base = index.expr(st)
        const = beta * base.constant
        terms: dict[int, float] = {k: beta * c for k, c in base.terms}
        for g in gens:
            e = index.expr(g * st)
            const -= e.constant
            for k, c in e.terms:
                terms[k] = terms.get(k, 0.0) - c
        return AffineExpr(const, tuple(sorted((k, c) for k, c in terms.items() if c != 0.0)))

    basis = _basis(index, d - 1) if d >= 1 else [sg.identity()]
    return _block("beta", index, basis, cell)


@dataclass(frozen=True)
class BetaBound:
    """Scalar ``beta`` with ``sum_i e_i(x) <= beta`` on the support box."""

    value: float

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError(f"beta must be positive, got {self.value}")

    @classmethod
    def from_box(cls, semigroup: PayoffSemigroup, upper: Sequence[float]) -> "BetaBound":
        """Sum of each generator's exact maximum over ``[0, upper]``."""
        return cls(sum(g.sup_on_box(upper) for g in semigroup.generators))


@dataclass(frozen=True)
class MomentProblem:
    """Assembled relaxation: moment block, one localizing block per generator, beta block."""

    index: MomentIndex
    blocks: tuple[LmiBlock, ...]
    beta: BetaBound
    degree: int

    @property
    def dims(self) -> list[int]:
        return [b.dim for b in self.blocks]

    def to_conic(self, objective: Optional[np.ndarray] = None) -> ConicProblem:
        return ConicProblem(self.index.n_slots, [b.to_block() for b in self.blocks], objective)

    def evaluate(self, y) -> list[np.ndarray]:
        return [b.evaluate(y) for b in self.blocks]


def assemble(market: MarketInstance, d: Optional[int] = None, target: Optional[AbsLinear] = None) -> MomentProblem:
    """Build the degree-``d`` relaxation for ``market``.

    ``target``, if given, joins the semigroup as an unpriced generator: it
    enters the localizing blocks and ``beta`` but its price stays free.
    """
    d = market.degree if d is None else d
    if d < 1:
        raise ValueError(f"relaxation degree must be >= 1, got {d}")
    extra = (target,) if target is not None else ()
    sg = market.semigroup(extra)
    n = market.n_assets
    pinned = {sg.generator_element(i): p for i, p in enumerate(market.prices)}
    for j, q in enumerate(market.derivative_prices):
        pinned[sg.generator_element(n + j)] = q
    index = MomentIndex(sg, 2 * d, pinned)
    beta = BetaBound.from_box(sg, market.support)
    blocks = [build_moment_matrix(index, d)]
    blocks += [build_localizing_matrix(index, i, d) for i in range(sg.n_generators)]
    blocks.append(build_beta_matrix(index, beta.value, d))
    return MomentProblem(index, tuple(blocks), beta, d)
