"""Closed-form hulls where the structure allows them.

Rank-one quadratics and choose-one indicator constraints both admit explicit
convex hulls; minimizing over them reproduces the exact integer optimum.
The script also shows the column-space condition that decides whether the
factorized relaxation is tight, including the classic failure: a rank-one
quadratic under a choose-one constraint.
"""

import numpy as np

from hullkit.hulls import (
    choose_one_hull_minimize,
    hull_choose_one_lowerbound,
    hull_rank_one_lowerbound,
    rank_one_hull_minimize,
)
from hullkit.model import (
    FactorizedInstance,
    MiqoInstance,
    SolutionPoint,
    SupportFamily,
    brute_force_solve,
    brute_force_solve_factorized,
    gen_random_psd,
)
from hullkit.polytope import check_technical_condition

rng = np.random.default_rng(5)

print("== rank-one hull ==")
h = np.array([1.0, -2.0, 0.5])
alpha = -1.3
b = np.array([0.4, 0.2, 0.6])
finst = FactorizedInstance(h, alpha * h, b, SupportFamily.hypercube())
hull_val = rank_one_hull_minimize(h, alpha * h, b)
exact = brute_force_solve_factorized(finst)
print(f"h = {h.tolist()}, a = {alpha} * h, b = {b.tolist()}")
print(f"hull minimum {hull_val:.6f}  vs  enumeration {exact.value:.6f}")
p = SolutionPoint(np.array([1.0, 0.0, 0.0]), np.array([0.5, 0.0, 0.0]), 0.0)
print(f"fractional point z = {p.z.tolist()}: hull demands "
      f"t >= {hull_rank_one_lowerbound(h, p):.4f} ((h'x)^2 doubled by z)")

print("\n== choose-one hull ==")
Q = gen_random_psd(4, seed=11, diag_dominance=0.5)
a = rng.standard_normal(4)
bb = np.full(4, 0.1)
inst = MiqoInstance(Q, a, bb, SupportFamily.choose_one())
print(f"hull minimum {choose_one_hull_minimize(Q, a, bb):.6f}  vs  "
      f"enumeration {brute_force_solve(inst).value:.6f}")
frac = SolutionPoint(np.array([0.7, 0.0, 0.0, 0.0]),
                     np.array([0.5, 0.25, 0.0, 0.0]), 0.0)
print(f"fractional feasible point: t >= {hull_choose_one_lowerbound(Q, frac):.4f}")

print("\n== when is the factorized relaxation tight? ==")
full = FactorizedInstance(h, np.zeros(3), np.zeros(3), SupportFamily.hypercube())
print(f"rank-one, all supports admissible: condition holds -> "
      f"{check_technical_condition(full)}")
c1 = FactorizedInstance(h, np.zeros(3), np.zeros(3), SupportFamily.choose_one())
print(f"rank-one under choose-one supports: condition holds -> "
      f"{check_technical_condition(c1)}")
print("(in the failing case the relaxation stays valid but can be unbounded"
      " even though the integer problem is not)")
