"""
One asset, Hankel moment matrices
---------------------------------

A single forward trading at 0.5 with payoff in [0, 1]. The moment matrix
of degree d is the Hankel matrix of the unknown moments E[x^k], and the
relaxation asks for values that make it (and its localizing companions)
positive semidefinite. We then bound a call struck at 0.4 and compare with
the exact static bounds [0.1, 0.3] from the grid oracle.
"""
import numpy as np

from momentarb import Call, MarketInstance, check_no_arbitrage, oracle_bound, price_bounds
from momentarb.moments import assemble

market = MarketInstance(prices=(0.5,), support=(1.0,))

# %% The degree-2 relaxation: a 3x3 Hankel block plus localizing blocks
problem = assemble(market, 2)
for block in problem.blocks:
    labels = [problem.index.semigroup.label(e) for e in block.basis]
    print(f"{block.label:22s} dim {block.dim}  basis {labels}")

# %% Feasibility: the point mass at 0.5 is one witness, the solver finds another.
# At this degree f(x1^4) is only bounded below, hence the large value.
report = check_no_arbitrage(market)
print(report.verdict.value, f"margin {report.margin:.4f}")
print({k: round(v, 4) for k, v in report.moments.items()})

# %% Call bounds by degree
call = Call((1.0,), 0.4)
for d in (1, 2, 3):
    lo = price_bounds(market, call, "lower", d).value
    up = price_bounds(market, call, "upper", d).value
    print(f"d={d}: [{lo:.6f}, {up:.6f}]")

exact = (oracle_bound(market, call, "lower", 3).value, oracle_bound(market, call, "upper", 3).value)
print("grid oracle:", np.round(exact, 9))
