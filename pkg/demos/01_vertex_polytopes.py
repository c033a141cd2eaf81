"""The extended-space view of indicator quadratics, by construction.

For a positive definite Q, every admissible support S pairs the 0/1 vector
1_S with the padded inverse of Q_S.  The convex hull of those pairs is a
polytope whose linear description, together with one PSD constraint, is all
the convexification needs.  This script builds those vertex sets for the
coupled two-variable quadratic and for a rank-two factor on three variables,
and checks the identities the vertices satisfy.
"""

import numpy as np

from hullkit.model import FactorizedInstance, MiqoInstance, SupportFamily
from hullkit.polytope import (
    dimension_estimate,
    enumerate_vertices,
    enumerate_vertices_factorized,
    verify_trace_equalities,
)

d1, d2 = 2.0, 3.0
Q = np.array([[d1, -1.0], [-1.0, d2]])
inst = MiqoInstance(Q, np.zeros(2), np.zeros(2), SupportFamily.hypercube())

print("== coupled two-variable quadratic ==")
print(f"Q =\n{Q}")
vs = enumerate_vertices(inst)
for v in vs.vertices:
    print(f"  z = {v.z.astype(int).tolist()}   W = {np.round(v.W, 6).tolist()}")

report = verify_trace_equalities(Q, vs)
print(f"diagonal identities (WQ)_ii = z_i: max violation {report.max_violation:.2e}")
print(f"affine dimension: {dimension_estimate(vs)} "
      f"(upper bound n(n+1)/2 = {2 * 3 // 2})")

print()
print("== rank-two factor on three variables ==")
F = np.array([[1.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
print(f"F' = {F.T.tolist()}  (so x'FF'x = (x1+x2+x3)^2 + x3^2)")
finst = FactorizedInstance(F, np.zeros(3), np.zeros(3), SupportFamily.hypercube())
fvs = enumerate_vertices_factorized(finst)
print("vertices carry k x k orthogonal projections instead of n x n inverses:")
for v in fvs.vertices:
    lam = np.linalg.eigvalsh(v.W)
    print(f"  z = {v.z.astype(int).tolist()}   W = {np.round(v.W, 6).tolist()}"
          f"   eigenvalues {np.round(lam, 9).tolist()}")
print(f"affine dimension: {dimension_estimate(fvs)}")
