"""One-period market description: forwards, support box and abs-affine derivatives."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .payoffs import AbsLinear, PayoffSemigroup

__all__ = ["MarketInstance", "MarketValidationError"]


class MarketValidationError(ValueError):
    """Raised for a structurally invalid market; ``violations`` lists each problem."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class MarketInstance:
    """Quoted prices in a one-period forward market (zero interest rate).

    Asset ``i`` pays ``x_i in [0, support[i]]`` at maturity and trades at
    ``prices[i]`` today. Derivatives are abs-affine payoffs ``|a.x - K|``;
    calls are converted to straddles before they get here.
    """

    prices: tuple[float, ...]
    support: tuple[float, ...]
    derivatives: tuple[AbsLinear, ...] = ()
    derivative_prices: tuple[float, ...] = ()
    asset_names: tuple[str, ...] = field(default=())
    degree: int = 2

    def __post_init__(self):
        object.__setattr__(self, "prices", tuple(float(p) for p in self.prices))
        object.__setattr__(self, "support", tuple(float(b) for b in self.support))
        object.__setattr__(self, "derivatives", tuple(self.derivatives))
        object.__setattr__(self, "derivative_prices", tuple(float(q) for q in self.derivative_prices))
        if not self.asset_names:
            object.__setattr__(self, "asset_names", tuple(f"x{i + 1}" for i in range(len(self.prices))))
        else:
            object.__setattr__(self, "asset_names", tuple(self.asset_names))
        violations = self.structural_violations()
        if violations:
            raise MarketValidationError(violations)

    @property
    def n_assets(self) -> int:
        return len(self.prices)

    @property
    def n_derivatives(self) -> int:
        return len(self.derivatives)

    def structural_violations(self) -> list[str]:
        v = []
        if self.n_assets == 0:
            v.append("market has no assets")
        if len(self.support) != self.n_assets:
            v.append(f"support has {len(self.support)} entries for {self.n_assets} assets")
        if len(self.asset_names) != self.n_assets:
            v.append("asset_names length does not match prices")
        if len(self.derivative_prices) != self.n_derivatives:
            v.append(f"{self.n_derivatives} derivatives but {len(self.derivative_prices)} prices")
        for i, p in enumerate(self.prices):
            if not math.isfinite(p):
                v.append(f"price of {self.asset_names[i] if i < len(self.asset_names) else i} is not finite")
        for i, b in enumerate(self.support):
            if not (math.isfinite(b) and b > 0):
                v.append(f"support bound {i} must be finite and positive, got {b}")
        for j, (g, q) in enumerate(zip(self.derivatives, self.derivative_prices)):
            if g.n_assets != self.n_assets:
                v.append(f"derivative {j} has {g.n_assets} coefficients for {self.n_assets} assets")
            if not math.isfinite(q):
                v.append(f"price of derivative {j} is not finite")
        if self.degree < 1:
            v.append(f"relaxation degree must be >= 1, got {self.degree}")
        return v

    def static_violations(self, atol: float = 0.0) -> list[str]:
        """Price-range checks that certify arbitrage without any optimization.

        Asset prices must lie in ``[0, B_i]``; a derivative price must lie
        between ``|a.p - K|`` (Jensen) and the payoff's maximum on the box.
        """
        v = []
        for name, p, b in zip(self.asset_names, self.prices, self.support):
            if p < -atol:
                v.append(f"{name} price {p:g} is negative")
            if p > b + atol:
                v.append(f"{name} price {p:g} exceeds its support bound {b:g}")
        forwards = np.asarray(self.prices)
        for g, q in zip(self.derivatives, self.derivative_prices):
            lo = abs(float(np.dot(g.coefficients, forwards)) - g.offset)
            hi = g.sup_on_box(self.support)
            if q < lo - atol:
                v.append(f"{g.label} price {q:g} is below its forward intrinsic value {lo:g}")
            if q > hi + atol:
                v.append(f"{g.label} price {q:g} exceeds the payoff maximum {hi:g} on the support")
        return v

    def semigroup(self, extra: Sequence[AbsLinear] = ()) -> PayoffSemigroup:
        return PayoffSemigroup(self.n_assets, self.derivatives + tuple(extra), self.asset_names)

    def scaled(self, factor: float) -> "MarketInstance":
        """All prices, strikes and support bounds multiplied by ``factor > 0``."""
        if not factor > 0:
            raise ValueError("scale factor must be positive")
        derivs = tuple(replace(g, offset=g.offset * factor) for g in self.derivatives)
        return replace(
            self,
            prices=tuple(p * factor for p in self.prices),
            support=tuple(b * factor for b in self.support),
            derivatives=derivs,
            derivative_prices=tuple(q * factor for q in self.derivative_prices),
        )

    def with_degree(self, degree: int) -> "MarketInstance":
        return replace(self, degree=degree)
