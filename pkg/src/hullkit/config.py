"""Central numerical tolerances.

Every routine that needs a cutoff takes a :class:`Tolerances` record and
defaults to :data:`DEFAULT_TOLS`, so the whole package can be retuned from one
place.  The defaults are chosen for dense double-precision work on matrices of
desk scale (n up to roughly 100).
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # Rank decisions: singular values below rank_rel * (largest singular
    # value) are treated as zero, with an absolute floor rank_floor.
    # Routines that extract singular values from A^T A see the squared
    # spectrum, where roundoff inflates true zeros to ~sqrt(eps); those use
    # the wider rank_rel_gram instead.
    rank_rel: float = 1e-10
    rank_rel_gram: float = 1e-7
    rank_floor: float = 1e-12

    # Cyclic Jacobi eigensolver: stop once the off-diagonal Frobenius mass
    # drops below jacobi_off * ||A||_F, give up after jacobi_sweeps sweeps.
    jacobi_off: float = 1e-12
    jacobi_sweeps: int = 100

    # Cholesky pivot threshold, relative to the largest entry of the matrix.
    chol_pivot_rel: float = 1e-12

    # Verification slacks.
    penrose: float = 1e-8         # pseudoinverse identity residuals
    psd: float = 1e-8             # lambda_min >= -psd counts as PSD
    trace_eq: float = 1e-9        # (WQ)_ii == z_i residual
    idempotent: float = 1e-8      # projection-matrix residuals
    cut_slack: float = 1e-8       # projected cut slack threshold

    # LP machinery.
    lp_feas: float = 1e-8         # row feasibility at a claimed optimum
    lp_reduced_cost: float = 1e-9
    lp_ratio_tie: float = 1e-9    # ratios within this of the best tie
    lp_ratio_eps: float = 2e-9    # smaller tableau entries do not block a step
    lp_small_pivot: float = 1e-7  # refresh the tableau before accepting less
    lp_pivot_min: float = 1e-11   # smaller pivots are a numerical breakdown
    lp_degenerate_cap: int = 50   # degenerate pivots before Bland's rule
    lp_refresh_every: int = 50    # pivots between exact refactorizations

    # Branch and bound.
    integrality: float = 1e-6
    bnb_prune: float = 1e-9

    # Projected-gradient solvers.
    pg_grad: float = 1e-7
    pg_max_iter: int = 5000
    pg_armijo: float = 1e-4


DEFAULT_TOLS = Tolerances()
