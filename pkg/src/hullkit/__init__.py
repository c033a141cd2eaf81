"""hullkit: convex-hull machinery for quadratic minimization with indicators.

The package is organized around one pipeline:

* :mod:`hullkit.linalg` - dense symmetric kernels (Jacobi eigensolver,
  pseudoinverse, padded submatrix inverses, Schur tests).
* :mod:`hullkit.model` - problem data, the exact enumeration oracle, and
  instance generators.
* :mod:`hullkit.polytope` - vertex sets of the base polytopes, their trace
  identities, dimension, and the factorized-representation rank condition.
* :mod:`hullkit.formulations` - the explicit big-M mixed-integer linear
  model, its LP relaxation, convex baselines, and LP-file interchange.
* :mod:`hullkit.hulls` - closed-form hulls, facet systems, multiplier
  spectrahedron, and original-space cut separation.
* :mod:`hullkit.solver` - in-tree simplex, branch and bound, and
  projected-gradient bounds.
* :mod:`hullkit.cli` - the ``hullkit`` command-line front end.
"""

__version__ = "0.1.0"
