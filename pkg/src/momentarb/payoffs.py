"""
Market payoffs and the truncated payoff semigroup.

Payoffs are products of generators: the asset payoffs ``x_i`` and
absolute-affine derivative payoffs ``|a.x - K|`` (straddles, spread
straddles). Because ``|a.x - K|**2 == (a.x - K)**2``, any product of
generators can be rewritten as a polynomial in ``x`` times a product of
*distinct* abs factors. Those products ``x**beta * prod_{j in S} |a_j.x - K_j|``
are the canonical elements of the semigroup; every other product is a
linear combination of them.

Exponent vectors have one entry per generator: assets first (by index),
then derivatives in declaration order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import total_ordering
from typing import Sequence, Union

import numpy as np

__all__ = [
    "Asset",
    "AbsLinear",
    "PayoffGenerator",
    "SemigroupElement",
    "PolynomialExpansion",
    "PayoffSemigroup",
    "enumerate_semigroup",
    "canonicalize",
    "evaluate",
    "count_basis",
    "count_straddle_basis",
    "straddle_price_from_call",
    "call_price_from_straddle",
]

Monomial = tuple[int, ...]


@dataclass(frozen=True)
class Asset:
    """Payoff ``x_i`` of the asset with zero-based ``index``."""

    index: int
    name: str = ""

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"asset index must be nonnegative, got {self.index}")

    @property
    def label(self) -> str:
        return self.name or f"x{self.index + 1}"

    def __call__(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float)[..., self.index]

    def sup_on_box(self, upper) -> float:
        return float(upper[self.index])


@dataclass(frozen=True)
class AbsLinear:
    """Payoff ``|a.x - K|`` for a nonzero coefficient vector ``a``.

    A straddle on asset ``i`` uses ``a = e_i``; a spread straddle uses
    ``a = e_i - e_j``.
    """

    coefficients: tuple[float, ...]
    offset: float
    name: str = ""

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if not coeffs or not any(coeffs):
            raise ValueError("AbsLinear needs a nonzero coefficient vector")
        if not all(math.isfinite(c) for c in coeffs) or not math.isfinite(self.offset):
            raise ValueError("AbsLinear coefficients and offset must be finite")
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def straddle(cls, n_assets: int, asset: int, strike: float, name: str = "") -> "AbsLinear":
        a = [0.0] * n_assets
        a[asset] = 1.0
        return cls(tuple(a), strike, name)

    @classmethod
    def spread(cls, n_assets: int, long: int, short: int, strike: float, name: str = "") -> "AbsLinear":
        a = [0.0] * n_assets
        a[long] += 1.0
        a[short] -= 1.0
        return cls(tuple(a), strike, name)

    @property
    def n_assets(self) -> int:
        return len(self.coefficients)

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        parts = []
        for i, c in enumerate(self.coefficients):
            if c == 0:
                continue
            sign = "-" if c < 0 else "+"
            mag = "" if abs(c) == 1 else f"{abs(c):g}*"
            parts.append(f"{sign}{mag}x{i + 1}")
        body = "".join(parts).lstrip("+")
        return f"|{body}-{self.offset:g}|"

    def linear_part(self) -> dict[Monomial, float]:
        """``a.x - K`` as a polynomial dictionary."""
        n = self.n_assets
        poly: dict[Monomial, float] = {}
        for i, c in enumerate(self.coefficients):
            if c != 0:
                mono = [0] * n
                mono[i] = 1
                poly[tuple(mono)] = c
        if self.offset != 0:
            poly[(0,) * n] = -self.offset
        return poly

    def same_payoff(self, other: "AbsLinear", atol: float = 1e-12) -> bool:
        """True when both describe the same function, i.e. ``a == ±a'`` and ``K == ±K'``."""
        a = np.array(self.coefficients)
        b = np.array(other.coefficients)
        if a.shape != b.shape:
            return False
        for s in (1.0, -1.0):
            if np.allclose(a, s * b, rtol=0, atol=atol) and abs(self.offset - s * other.offset) <= atol:
                return True
        return False

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.abs(x @ np.asarray(self.coefficients) - self.offset)

    def sup_on_box(self, upper) -> float:
        """Exact maximum of the payoff over ``[0, upper]``; attained at a box corner."""
        a = np.asarray(self.coefficients)
        upper = np.asarray(upper, dtype=float)
        hi = float(np.sum(np.maximum(a, 0.0) * upper))
        lo = float(np.sum(np.minimum(a, 0.0) * upper))
        return max(abs(hi - self.offset), abs(lo - self.offset))


PayoffGenerator = Union[Asset, AbsLinear]


@total_ordering
@dataclass(frozen=True)
class SemigroupElement:
    """A product of generators, stored as its exponent vector.

    Ordering is graded: lower degree first, then exponent vectors compared
    lexicographically with larger leading exponents first, so that
    ``1 < x1 < x2 < s1 < x1**2 < x1*x2 < ...``.
    """

    exponents: tuple[int, ...]

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    @property
    def sort_key(self) -> tuple:
        return (self.degree, tuple(-e for e in self.exponents))

    def __lt__(self, other: "SemigroupElement") -> bool:
        return self.sort_key < other.sort_key

    def __mul__(self, other: "SemigroupElement") -> "SemigroupElement":
        if len(self.exponents) != len(other.exponents):
            raise ValueError("elements belong to different semigroups")
        return SemigroupElement(tuple(a + b for a, b in zip(self.exponents, other.exponents)))

    def divides(self, other: "SemigroupElement") -> bool:
        return all(a <= b for a, b in zip(self.exponents, other.exponents))


@dataclass(frozen=True)
class PolynomialExpansion:
    """A generator product rewritten as ``sum_beta c_beta x**beta`` times residual abs factors.

    ``residual`` holds the abs-factor parity (0 or 1 per derivative
    generator). ``terms`` maps asset monomials to coefficients and is kept
    sorted for determinism.
    """

    terms: tuple[tuple[Monomial, float], ...]
    residual: tuple[int, ...]

    def atoms(self) -> dict[SemigroupElement, float]:
        """The expansion as a linear combination of canonical elements."""
        return {SemigroupElement(mono + self.residual): c for mono, c in self.terms}


def _poly_mul(p: dict[Monomial, float], q: dict[Monomial, float]) -> dict[Monomial, float]:
    out: dict[Monomial, float] = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = tuple(a + b for a, b in zip(m1, m2))
            out[m] = out.get(m, 0.0) + c1 * c2
    return {m: c for m, c in out.items() if c != 0.0}


class PayoffSemigroup:
    """Semigroup generated by ``n`` asset payoffs and a list of abs-affine payoffs.

    Parameters
    ----------
    n_assets : int
        Number of assets; asset generators are ``x_1..x_n`` in index order.
    derivatives : sequence of AbsLinear
        Abs-affine derivative payoffs, each with ``n_assets`` coefficients.
    asset_names : sequence of str, optional
        Display names for the assets.
    """

    def __init__(self, n_assets: int, derivatives: Sequence[AbsLinear] = (), asset_names=None):
        if n_assets < 1:
            raise ValueError("a payoff semigroup needs at least one asset")
        names = list(asset_names) if asset_names is not None else [f"x{i + 1}" for i in range(n_assets)]
        if len(names) != n_assets:
            raise ValueError("asset_names length must equal n_assets")
        for g in derivatives:
            if not isinstance(g, AbsLinear):
                raise TypeError(f"derivative generators must be AbsLinear, got {type(g).__name__}")
            if g.n_assets != n_assets:
                raise ValueError(f"{g.label} has {g.n_assets} coefficients, expected {n_assets}")
        self.n_assets = n_assets
        self.assets = tuple(Asset(i, names[i]) for i in range(n_assets))
        self.derivatives = tuple(derivatives)
        self._square_cache: dict[int, dict[Monomial, float]] = {}

    @classmethod
    def from_generators(cls, generators: Sequence[PayoffGenerator]) -> "PayoffSemigroup":
        """Build from a flat generator list: assets ``0..n-1`` in order, then AbsLinear payoffs."""
        generators = list(generators)
        if not generators:
            raise ValueError("generator list is empty")
        assets = [g for g in generators if isinstance(g, Asset)]
        derivs = [g for g in generators if isinstance(g, AbsLinear)]
        if generators != assets + derivs:
            raise ValueError("assets must precede derivative generators")
        if [a.index for a in assets] != list(range(len(assets))):
            raise ValueError("asset generators must be x_1..x_n in index order")
        n = len(assets) or (derivs[0].n_assets if derivs else 0)
        if not assets:
            raise ValueError("at least one asset generator is required")
        return cls(n, derivs, [a.label for a in assets])

    @property
    def generators(self) -> tuple[PayoffGenerator, ...]:
        return self.assets + self.derivatives

    @property
    def n_generators(self) -> int:
        return self.n_assets + len(self.derivatives)

    def identity(self) -> SemigroupElement:
        return SemigroupElement((0,) * self.n_generators)

    def generator_element(self, i: int) -> SemigroupElement:
        e = [0] * self.n_generators
        e[i] = 1
        return SemigroupElement(tuple(e))

    def label(self, element: SemigroupElement) -> str:
        parts = []
        for g, e in zip(self.generators, element.exponents):
            if e == 0:
                continue
            parts.append(g.label if e == 1 else f"{g.label}^{e}")
        return "*".join(parts) or "1"

    def is_canonical(self, element: SemigroupElement) -> bool:
        return all(e <= 1 for e in element.exponents[self.n_assets:])

    def _squared(self, j: int) -> dict[Monomial, float]:
        if j not in self._square_cache:
            lin = self.derivatives[j].linear_part()
            self._square_cache[j] = _poly_mul(lin, lin)
        return self._square_cache[j]

    def canonicalize(self, exponents) -> PolynomialExpansion:
        """Rewrite a raw generator product into polynomial content times residual abs factors."""
        exponents = tuple(int(e) for e in getattr(exponents, "exponents", exponents))
        if len(exponents) != self.n_generators:
            raise ValueError(f"exponent vector has length {len(exponents)}, expected {self.n_generators}")
        if any(e < 0 for e in exponents):
            raise ValueError("exponents must be nonnegative")
        n = self.n_assets
        poly = {exponents[:n]: 1.0}
        residual = []
        for j, e in enumerate(exponents[n:]):
            for _ in range(e // 2):
                poly = _poly_mul(poly, self._squared(j))
            residual.append(e % 2)
        terms = tuple(sorted(poly.items(), key=lambda mc: (sum(mc[0]), tuple(-k for k in mc[0]))))
        return PolynomialExpansion(terms, tuple(residual))

    def expand(self, exponents) -> dict[SemigroupElement, float]:
        """Linear combination of canonical elements equal to the raw product."""
        return self.canonicalize(exponents).atoms()

    def enumerate(self, max_degree: int) -> list[SemigroupElement]:
        """All canonical elements of degree ``<= max_degree`` in graded order."""
        if max_degree < 0:
            raise ValueError("max_degree must be nonnegative")
        n, k = self.n_assets, len(self.derivatives)
        out: list[tuple[int, ...]] = []

        def rec(prefix: list[int], pos: int, budget: int):
            if pos == n + k:
                out.append(tuple(prefix))
                return
            top = budget if pos < n else min(1, budget)
            for e in range(top + 1):
                prefix.append(e)
                rec(prefix, pos + 1, budget - e)
                prefix.pop()

        rec([], 0, max_degree)
        return sorted(SemigroupElement(e) for e in out)

    def evaluate(self, element, x) -> np.ndarray:
        """Product of generator payoffs at ``x`` (vectorised over leading axes of ``x``)."""
        exponents = getattr(element, "exponents", element)
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n_assets:
            raise ValueError(f"point has dimension {x.shape[-1]}, expected {self.n_assets}")
        out = np.ones(x.shape[:-1])
        for g, e in zip(self.generators, exponents):
            if e:
                out = out * g(x) ** e
        return out

    def evaluate_expansion(self, expansion: PolynomialExpansion, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        poly = np.zeros(x.shape[:-1])
        for mono, c in expansion.terms:
            poly = poly + c * np.prod(x ** np.asarray(mono), axis=-1)
        for g, r in zip(self.derivatives, expansion.residual):
            if r:
                poly = poly * g(x)
        return poly


def enumerate_semigroup(generators: Sequence[PayoffGenerator], max_degree: int) -> list[SemigroupElement]:
    """Canonical elements of degree ``<= max_degree`` (which must be even) in graded order."""
    if max_degree < 0 or max_degree % 2:
        raise ValueError(f"max_degree must be a nonnegative even integer, got {max_degree}")
    return PayoffSemigroup.from_generators(generators).enumerate(max_degree)


def canonicalize(exponents, generators: Sequence[PayoffGenerator]) -> PolynomialExpansion:
    return PayoffSemigroup.from_generators(generators).canonicalize(exponents)


def evaluate(element, x, generators: Sequence[PayoffGenerator]) -> np.ndarray:
    return PayoffSemigroup.from_generators(generators).evaluate(element, x)


_INT64_MAX = 2**63 - 1


def count_basis(n_generators: int, degree: int) -> int:
    """Number of monomials of degree ``<= degree`` in ``n_generators`` variables.

    Raises
    ------
    OverflowError
        If the count does not fit in a signed 64-bit integer.
    """
    if n_generators < 0 or degree < 0:
        raise ValueError("arguments must be nonnegative")
    count = math.comb(n_generators + degree, n_generators)
    if count > _INT64_MAX:
        raise OverflowError(f"basis count C({n_generators + degree}, {n_generators}) overflows int64")
    return count


def count_straddle_basis(n_assets: int, n_straddles: int, d: int) -> int:
    """Element count ``(k+1) * C(n+2d, n)`` when ``k`` straddles replace calls on ``n`` assets.

    This counts polynomials of degree ``<= 2d`` times either 1 or a single
    straddle; it ignores products of distinct straddles.
    """
    if n_assets < 0 or n_straddles < 0 or d < 0:
        raise ValueError("arguments must be nonnegative")
    count = (n_straddles + 1) * math.comb(n_assets + 2 * d, n_assets)
    if count > _INT64_MAX:
        raise OverflowError("straddle basis count overflows int64")
    return count


def straddle_price_from_call(forward: float, strike: float, call: float) -> float:
    """Price of ``|x - K|`` from the call price, using ``|x-K| = (K-x) + 2(x-K)^+``."""
    return (strike - forward) + 2.0 * call


def call_price_from_straddle(forward: float, strike: float, straddle: float) -> float:
    """Inverse of :func:`straddle_price_from_call`."""
    return (straddle - strike + forward) / 2.0
