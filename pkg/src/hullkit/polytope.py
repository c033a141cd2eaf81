"""Vertex sets of the base polytopes behind the extended formulation.

For positive definite Q the base polytope is the convex hull of the pairs
(1_S, padded inverse of Q_S) over admissible supports S; in the factorized
representation Q = F F' the matrix component becomes the k x k orthogonal
projection onto the row space of F_S.  This module enumerates those vertex
sets, checks the linear identities they satisfy (trace equalities, eigenvalue
ordering, idempotency), estimates the affine dimension, and decides the
column-space condition under which the factorized relaxation is tight:

    col(F) = intersection over admissible S of preimage_S(col(F_S)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLS, Tolerances
from .errors import DimensionMismatch
from .linalg import (
    column_space_basis,
    padded_submatrix_inverse,
    pseudoinverse,
    subspace_intersection,
)
from .model import FactorizedInstance, MiqoInstance, indices_to_mask

__all__ = [
    "PolytopeVertex",
    "VertexSet",
    "enumerate_vertices",
    "enumerate_vertices_factorized",
    "verify_trace_equalities",
    "TraceReport",
    "dimension_estimate",
    "check_technical_condition",
    "vertex_objective_minimum",
]


@dataclass(frozen=True)
class PolytopeVertex:
    """One extreme point (z, W); W is n x n in canonical mode, k x k factorized."""

    mask: int
    z: np.ndarray
    W: np.ndarray


@dataclass(frozen=True)
class VertexSet:
    vertices: tuple[PolytopeVertex, ...]
    mode: str  # 'canonical' | 'factorized'
    n: int
    w_dim: int

    def __len__(self) -> int:
        return len(self.vertices)

    def coordinates(self) -> np.ndarray:
        """Vertices flattened as (z, upper triangle of W) rows."""
        iu = np.triu_indices(self.w_dim)
        return np.array([np.concatenate([v.z, v.W[iu]]) for v in self.vertices])


def _z_vector(mask: int, n: int) -> np.ndarray:
    return np.array([(mask >> i) & 1 for i in range(n)], dtype=float)


def enumerate_vertices(
    inst: MiqoInstance, tols: Tolerances = DEFAULT_TOLS
) -> VertexSet:
    """One vertex per admissible support, sorted by bitmask."""
    n = inst.n
    out = []
    for combo in inst.support.iter_index_tuples(n):
        mask = indices_to_mask(combo)
        W = padded_submatrix_inverse(inst.Q, combo, tols)
        out.append(PolytopeVertex(mask, _z_vector(mask, n), W))
    out.sort(key=lambda v: v.mask)
    return VertexSet(tuple(out), "canonical", n, n)


def enumerate_vertices_factorized(
    inst: FactorizedInstance, tols: Tolerances = DEFAULT_TOLS
) -> VertexSet:
    """Vertices (1_S, proj onto rowspace of F_S), sorted by bitmask."""
    n, k = inst.n, inst.k
    out = []
    for combo in inst.support.iter_index_tuples(n):
        mask = indices_to_mask(combo)
        if combo:
            FS = inst.F[np.asarray(combo, dtype=int), :]
            W = pseudoinverse(FS, tols) @ FS
            W = 0.5 * (W + W.T)
        else:
            W = np.zeros((k, k))
        out.append(PolytopeVertex(mask, _z_vector(mask, n), W))
    out.sort(key=lambda v: v.mask)
    return VertexSet(tuple(out), "factorized", n, k)


@dataclass(frozen=True)
class TraceReport:
    violations: np.ndarray  # per-vertex max |(WQ)_ii - z_i|
    max_violation: float
    passed: bool


def verify_trace_equalities(
    Q: np.ndarray, vs: VertexSet, tols: Tolerances = DEFAULT_TOLS
) -> TraceReport:
    """Check the diagonal identities (W Q)_ii = z_i at every canonical vertex."""
    if vs.mode != "canonical":
        raise ValueError("trace equalities apply to canonical vertex sets")
    if Q.shape[0] != vs.n:
        raise DimensionMismatch(f"Q is {Q.shape[0]}x{Q.shape[0]}, vertices have n={vs.n}")
    viol = np.array(
        [np.abs(np.diag(v.W @ Q) - v.z).max(initial=0.0) for v in vs.vertices]
    )
    vmax = float(viol.max(initial=0.0))
    return TraceReport(viol, vmax, vmax <= tols.trace_eq)


def dimension_estimate(vs: VertexSet, tols: Tolerances = DEFAULT_TOLS) -> int:
    """Affine dimension of the vertex set (rank of differences)."""
    coords = vs.coordinates()
    if coords.shape[0] == 0:
        raise ValueError("empty vertex set")
    diffs = (coords[1:] - coords[0]).T
    if diffs.size == 0:
        return 0
    return column_space_basis(diffs, tols).shape[1]


def _preimage_basis(F: np.ndarray, combo: tuple[int, ...], tols: Tolerances) -> np.ndarray:
    """Basis of {x : x_S in col(F_S)} = col(padded F_S) + span{e_i : i not in S}."""
    n = F.shape[0]
    padded = np.zeros_like(F)
    if combo:
        idx = np.asarray(combo, dtype=int)
        padded[idx, :] = F[idx, :]
    outside = np.eye(n)[:, [i for i in range(n) if i not in combo]]
    return column_space_basis(np.hstack([padded, outside]), tols)


def check_technical_condition(
    inst: FactorizedInstance, tols: Tolerances = DEFAULT_TOLS
) -> bool:
    """Whether col(F) equals the intersection of the support preimages.

    col(F) is always contained in the intersection, so the check reduces to
    comparing dimensions and projecting the intersection basis onto col(F).
    """
    F = inst.F
    bases = [
        _preimage_basis(F, combo, tols)
        for combo in inst.support.iter_index_tuples(inst.n)
    ]
    inter = subspace_intersection(bases, n=inst.n, tols=tols)
    colF = column_space_basis(F, tols)
    if inter.shape[1] != colF.shape[1]:
        return False
    resid = inter - colF @ (colF.T @ inter)
    return float(np.abs(resid).max(initial=0.0)) <= 1e-7


def vertex_objective_minimum(
    vs: VertexSet, C: np.ndarray, c: np.ndarray, constant: float = 0.0
) -> tuple[float, PolytopeVertex]:
    """Minimize <C, W> + c'z + constant over the vertex set by enumeration.

    Ties break toward the smaller bitmask (the set is stored mask-sorted).
    """
    best = None
    best_v = None
    for v in vs.vertices:
        val = float((C * v.W).sum() + c @ v.z + constant)
        if best is None or val < best:
            best = val
            best_v = v
    return best, best_v
