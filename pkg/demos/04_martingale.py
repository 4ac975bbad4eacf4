"""
Martingale transitions between two maturities
---------------------------------------------

Two marginals on a common finite support are linked by a martingale
transition exactly when the later one dominates the earlier in convex
order. The transport LP and the concave-kink test should always agree.
"""
import numpy as np

from momentarb import DiscreteMeasure, convex_order_check, find_transition

support = np.array([0.0, 0.5, 1.0])
mu = DiscreteMeasure(support, np.array([0.0, 1.0, 0.0]))
nu = DiscreteMeasure(support, np.array([0.5, 0.0, 0.5]))

# %% Mean-preserving spread: feasible, the middle state splits evenly
Q = find_transition(mu, nu)
print(np.round(Q.matrix, 6))
print(convex_order_check(mu, nu))

# %% Reversed, the spread cannot be undone
print(find_transition(nu, mu), convex_order_check(nu, mu).ordered)

# %% Random agreement check
rng = np.random.default_rng(0)
agree = 0
for _ in range(200):
    pts = np.sort(rng.uniform(0, 1, 5))
    a, b = DiscreteMeasure(pts, rng.dirichlet(np.ones(5))), DiscreteMeasure(pts, rng.dirichlet(np.ones(5)))
    agree += (find_transition(a, b) is not None) == convex_order_check(a, b).ordered
print(f"{agree}/200 agree")
