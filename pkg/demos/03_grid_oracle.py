"""
The grid oracle
---------------

Restricting the state-price measure to a grid turns price matching into a
linear program. It is exact for feasibility on grids that contain a
matching measure, gives inner bounds, and grows like L^n.
"""
import numpy as np

from momentarb import AbsLinear, Call, GridCapError, MarketInstance, check_no_arbitrage, oracle_bound, oracle_feasible

# %% A feasible straddle market and the witness the LP returns
market = MarketInstance((0.5,), (1.0,), (AbsLinear.straddle(1, 0, 0.5),), (0.25,))
res = oracle_feasible(market, 101)
print("feasible:", res.feasible, "support:", res.measure.points.ravel(), "weights:", np.round(res.measure.weights, 4))

# %% Three ways to quote an impossible price; oracle and relaxation agree
cases = {
    "forward above support": MarketInstance((1.2,), (1.0,)),
    "straddle above payoff max": MarketInstance((0.5,), (1.0,), (AbsLinear.straddle(1, 0, 0.4),), (0.7,)),
    "call below intrinsic": MarketInstance((0.5,), (1.0,), (AbsLinear.straddle(1, 0, 0.4),), (0.0,)),
}
for name, m in cases.items():
    print(f"{name:26s} oracle feasible: {oracle_feasible(m, 51).feasible}  "
          f"relaxation: {check_no_arbitrage(m, 2, prescreen=False).verdict.value}")

# %% Refinement: nested grids can only widen the inner bounds. Every kink is
# already a grid point and the extremal measures sit on kinks and corners,
# so here the bounds are reached at L=3.
two = MarketInstance(
    (0.5, 0.5), (1.0, 1.0),
    (AbsLinear.straddle(2, 0, 0.5), AbsLinear.straddle(2, 1, 0.5)), (0.25, 0.25),
)
basket = Call((1.0, 1.0), 0.8)
for L in (3, 5, 9, 17, 33):
    lo, up = (oracle_bound(two, basket, side, L).value for side in ("lower", "upper"))
    print(f"L={L:3d}: basket call in [{lo:.6f}, {up:.6f}]")

# %% The cap keeps the exponential growth in check
try:
    oracle_feasible(two, 2000)
except GridCapError as exc:
    print("refused:", exc)
