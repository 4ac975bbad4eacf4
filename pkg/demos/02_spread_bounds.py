"""
Spread option bounds from straddle quotes
-----------------------------------------

Two assets with forwards 0.5, payoffs in [0, 1], and a straddle struck at
0.5 on each asset quoted at 0.25. What can the spread straddle |x1 - x2|
be worth? The relaxation gives outer bounds that tighten with the degree;
the 51 x 51 grid LP gives inner bounds.
"""
from momentarb import AbsLinear, Call, MarketInstance, bound_vs_degree, oracle_bound

market = MarketInstance(
    prices=(0.5, 0.5),
    support=(1.0, 1.0),
    derivatives=(AbsLinear.straddle(2, 0, 0.5, "s1"), AbsLinear.straddle(2, 1, 0.5, "s2")),
    derivative_prices=(0.25, 0.25),
)
spread = AbsLinear.spread(2, 0, 1, 0.0, "spread")

# %% Relaxation bounds; bound_vs_degree also checks that they only tighten
for d, (lo, up) in zip((1, 2), bound_vs_degree(market, spread, [1, 2])):
    print(f"d={d}: [{lo.value:.6f}, {up.value:.6f}]")

print("grid 51x51:", [round(oracle_bound(market, spread, side, 51).value, 6) for side in ("lower", "upper")])

# %% The spread call (x1 - x2)^+ follows from the straddle by c = (q - K + a.p) / 2
for lo, up in bound_vs_degree(market, Call((1.0, -1.0), 0.0, "spread call"), [2]):
    print(f"spread call, d=2: [{lo.value:.6f}, {up.value:.6f}] from straddle [{lo.straddle_value:.6f}, {up.straddle_value:.6f}]")
