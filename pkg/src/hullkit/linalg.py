"""Dense symmetric linear algebra kernels.

Everything in this module is deterministic and built from plain numpy array
arithmetic: the eigensolver is a cyclic Jacobi iteration, the pseudoinverse
goes through an eigendecomposition of A^T A, and rank decisions use a single
relative singular-value cutoff (see :mod:`hullkit.config`).  That keeps
results reproducible bit-for-bit across runs, which the polytope and cut
machinery downstream relies on for tie-breaking.

Index sets are 0-based, sorted, duplicate-free tuples.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .config import DEFAULT_TOLS, Tolerances
from .errors import (
    DimensionMismatch,
    NoConvergence,
    NotPositiveDefinite,
    SingularSubmatrix,
)

__all__ = [
    "as_index_set",
    "symmetrize",
    "cholesky",
    "solve_cholesky",
    "eig_sym",
    "pseudoinverse",
    "padded_submatrix_inverse",
    "schur_psd_check",
    "column_space_basis",
    "subspace_intersection",
]


def as_index_set(members: Iterable[int], n: int) -> tuple[int, ...]:
    """Validate and normalize a set of indices into [0, n)."""
    idx = tuple(sorted(int(i) for i in members))
    if len(set(idx)) != len(idx):
        raise ValueError(f"duplicate indices in {idx}")
    if idx and (idx[0] < 0 or idx[-1] >= n):
        raise ValueError(f"indices {idx} out of range [0, {n})")
    return idx


def symmetrize(A: np.ndarray, check: bool = True) -> np.ndarray:
    """Return 0.5*(A + A^T) as float64, verifying A is square and finite."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    if check and A.size:
        scale = 1.0 + np.abs(A).max()
        if np.abs(A - A.T).max() > 1e-8 * scale:
            raise ValueError("matrix is not symmetric")
    return 0.5 * (A + A.T)


def cholesky(A: np.ndarray, tols: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Lower-triangular L with L L^T = A for positive definite A.

    Raises NotPositiveDefinite when a pivot falls at or below
    ``chol_pivot_rel * max|A|``.
    """
    A = symmetrize(A)
    n = A.shape[0]
    pivot_floor = tols.chol_pivot_rel * (np.abs(A).max() if A.size else 0.0)
    L = np.zeros((n, n))
    for j in range(n):
        d = A[j, j] - L[j, :j] @ L[j, :j]
        if d <= pivot_floor:
            raise NotPositiveDefinite(f"pivot {d:.3e} at column {j}")
        L[j, j] = math.sqrt(d)
        if j + 1 < n:
            L[j + 1 :, j] = (A[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L


def solve_cholesky(L: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve (L L^T) x = b given the lower factor L; b may be a matrix."""
    n = L.shape[0]
    y = np.array(b, dtype=float)
    if y.shape[0] != n:
        raise DimensionMismatch(f"rhs has {y.shape[0]} rows, expected {n}")
    for i in range(n):
        y[i] = (y[i] - L[i, :i] @ y[:i]) / L[i, i]
    for i in range(n - 1, -1, -1):
        y[i] = (y[i] - L[i + 1 :, i] @ y[i + 1 :]) / L[i, i]
    return y


def _jacobi_rotate(A: np.ndarray, V: np.ndarray, p: int, q: int) -> None:
    """Zero A[p,q] by a two-sided Givens rotation, accumulating into V."""
    apq = A[p, q]
    app = A[p, p]
    aqq = A[q, q]
    tau = (aqq - app) / (2.0 * apq)
    t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
    c = 1.0 / math.sqrt(1.0 + t * t)
    s = t * c
    new_p = c * A[p, :] - s * A[q, :]
    new_q = s * A[p, :] + c * A[q, :]
    A[p, :] = new_p
    A[q, :] = new_q
    # Symmetry gives the column update for entries outside the 2x2 block;
    # the block itself has the classic closed form.
    A[:, p] = new_p
    A[:, q] = new_q
    A[p, p] = app - t * apq
    A[q, q] = aqq + t * apq
    A[p, q] = 0.0
    A[q, p] = 0.0
    vp = c * V[:, p] - s * V[:, q]
    vq = s * V[:, p] + c * V[:, q]
    V[:, p] = vp
    V[:, q] = vq


def eig_sym(
    A: np.ndarray, tols: Tolerances = DEFAULT_TOLS
) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Returns ``(values, vectors)`` with eigenvalues sorted ascending and
    orthonormal eigenvectors in the columns of ``vectors``.  Deterministic for
    a fixed input: sweep order is fixed and each eigenvector's sign is
    normalized so its largest-magnitude entry is positive.
    """
    A = symmetrize(A).copy()
    n = A.shape[0]
    V = np.eye(n)
    if n == 0:
        return np.zeros(0), V
    norm = math.sqrt(float((A * A).sum()))
    if norm == 0.0:
        return np.zeros(n), V
    target = tols.jacobi_off * norm
    off_mask = ~np.eye(n, dtype=bool)

    def off_mass() -> float:
        # Summed directly over off-diagonal entries; subtracting the diagonal
        # mass from the total cancels catastrophically near convergence.
        return math.sqrt(float((A[off_mask] ** 2).sum()))

    converged = False
    off = off_mass()
    for _ in range(tols.jacobi_sweeps):
        if off <= target:
            converged = True
            break
        skip = 1e-18 * norm  # entries this small contribute nothing
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) > skip:
                    _jacobi_rotate(A, V, p, q)
        off = off_mass()
    else:
        converged = off <= target
    if not converged:
        raise NoConvergence(f"Jacobi sweeps exhausted, off-diagonal mass {off:.3e}")
    values = np.diag(A).copy()
    order = np.argsort(values, kind="stable")
    values = values[order]
    vectors = V[:, order]
    for j in range(n):
        k = int(np.argmax(np.abs(vectors[:, j])))
        if vectors[k, j] < 0:
            vectors[:, j] = -vectors[:, j]
    return values, vectors


def _as_matrix(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    if A.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got ndim={A.ndim}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def _rank_cutoff(sigma_max: float, tols: Tolerances, gram: bool = False) -> float:
    rel = tols.rank_rel_gram if gram else tols.rank_rel
    return max(rel * sigma_max, tols.rank_floor)


def pseudoinverse(A: np.ndarray, tols: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Moore-Penrose pseudoinverse.

    Symmetric inputs go through their own eigendecomposition; rectangular
    inputs through the eigendecomposition of A^T A.  Singular values below
    the rank cutoff are treated as zero, so this is a total function (the
    zero matrix maps to the zero matrix).  A 1-d input is read as a column.
    """
    A = _as_matrix(A)
    m, k = A.shape
    if m == 0 or k == 0:
        return np.zeros((k, m))
    if m == k and np.abs(A - A.T).max() <= 1e-12 * (1.0 + np.abs(A).max()):
        lam, V = eig_sym(A, tols)
        cutoff = _rank_cutoff(float(np.abs(lam).max(initial=0.0)), tols)
        keep = np.abs(lam) > cutoff
        if not keep.any():
            return np.zeros((k, m))
        Vr = V[:, keep]
        return (Vr / lam[keep]) @ Vr.T
    lam, V = eig_sym(A.T @ A, tols)
    sigma = np.sqrt(np.clip(lam, 0.0, None))
    cutoff = _rank_cutoff(float(sigma.max(initial=0.0)), tols, gram=True)
    keep = sigma > cutoff
    if not keep.any():
        return np.zeros((k, m))
    Vr = V[:, keep]
    return (Vr / (sigma[keep] ** 2)) @ (Vr.T @ A.T)


def padded_submatrix_inverse(
    Q: np.ndarray, S: Sequence[int], tols: Tolerances = DEFAULT_TOLS
) -> np.ndarray:
    """The n-by-n matrix equal to (Q_S)^-1 on S x S and zero elsewhere.

    Requires the principal submatrix Q_S to be positive definite; raises
    SingularSubmatrix otherwise.
    """
    Q = symmetrize(Q)
    n = Q.shape[0]
    S = as_index_set(S, n)
    W = np.zeros((n, n))
    if not S:
        return W
    idx = np.asarray(S, dtype=int)
    QS = Q[np.ix_(idx, idx)]
    try:
        L = cholesky(QS, tols)
    except NotPositiveDefinite as exc:
        raise SingularSubmatrix(f"Q restricted to {S} is not positive definite") from exc
    inv = solve_cholesky(L, np.eye(len(S)))
    W[np.ix_(idx, idx)] = 0.5 * (inv + inv.T)
    return W


def schur_psd_check(
    W11: np.ndarray,
    W12: np.ndarray,
    W22: np.ndarray,
    tols: Tolerances = DEFAULT_TOLS,
) -> bool:
    """Generalized Schur-complement test for blockwise positive semidefiniteness.

    True iff W11 >= 0, the range condition W11 W11^+ W12 = W12 holds, and the
    complement W22 - W12^T W11^+ W12 >= 0, all within the configured slack.
    """
    W11 = symmetrize(W11)
    W22 = symmetrize(W22)
    W12 = _as_matrix(W12)
    p = W11.shape[0]
    q = W22.shape[0]
    if W12.shape != (p, q):
        raise DimensionMismatch(f"W12 has shape {W12.shape}, expected {(p, q)}")
    lam11, _ = eig_sym(W11, tols)
    if lam11.size and lam11[0] < -tols.psd:
        return False
    pinv11 = pseudoinverse(W11, tols)
    scale12 = 1.0 + (np.abs(W12).max() if W12.size else 0.0)
    if W12.size and np.abs(W11 @ pinv11 @ W12 - W12).max() > tols.penrose * scale12:
        return False
    comp = W22 - W12.T @ pinv11 @ W12
    lam22, _ = eig_sym(symmetrize(comp, check=False), tols)
    return not (lam22.size and lam22[0] < -tols.psd)


def column_space_basis(A: np.ndarray, tols: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Orthonormal basis of col(A), with shape (rows, rank); empty for zero A."""
    A = _as_matrix(A)
    m, k = A.shape
    if m == 0 or k == 0:
        return np.zeros((m, 0))
    lam, V = eig_sym(A.T @ A, tols)
    sigma = np.sqrt(np.clip(lam, 0.0, None))
    cutoff = _rank_cutoff(float(sigma.max(initial=0.0)), tols, gram=True)
    keep = sigma > cutoff
    if not keep.any():
        return np.zeros((m, 0))
    U = A @ (V[:, keep] / sigma[keep])
    # Descending singular value order, with deterministic signs.
    U = U[:, ::-1]
    for j in range(U.shape[1]):
        i = int(np.argmax(np.abs(U[:, j])))
        if U[i, j] < 0:
            U[:, j] = -U[:, j]
    return U


def _orthogonal_complement(B: np.ndarray, n: int, tols: Tolerances) -> np.ndarray:
    """Orthonormal basis of the complement of col(B) in R^n (B orthonormal)."""
    if B.shape[1] == 0:
        return np.eye(n)
    lam, V = eig_sym(B @ B.T, tols)
    keep = lam < 0.5  # eigenvalues of a projector are near 0 or 1
    return V[:, keep]


def subspace_intersection(
    bases: Sequence[np.ndarray], n: int | None = None, tols: Tolerances = DEFAULT_TOLS
) -> np.ndarray:
    """Orthonormal basis of the intersection of the given column spans.

    Works by the complement trick: the intersection is the null space of the
    stacked orthogonal complements.  ``n`` fixes the ambient dimension when
    ``bases`` is empty.
    """
    mats = [column_space_basis(B, tols) for B in bases]
    if not mats:
        if n is None:
            raise ValueError("ambient dimension required for an empty intersection")
        return np.eye(n)
    amb = mats[0].shape[0]
    for B in mats:
        if B.shape[0] != amb:
            raise DimensionMismatch("bases live in different ambient dimensions")
    complements = [_orthogonal_complement(B, amb, tols) for B in mats]
    N = np.hstack(complements)
    if N.shape[1] == 0:
        return np.eye(amb)
    # Null space of N^T = complement of col(N).
    return _orthogonal_complement(column_space_basis(N, tols), amb, tols)
