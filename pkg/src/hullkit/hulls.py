"""Closed-form hulls, facet systems, and original-space cuts.

A FacetSystem is a linear description of the base polytope in (z, W) space:
rows  <Gamma_i, W> - gamma_i' z  {<=, =}  beta_i,  inequalities first.  From
any such description (complete or partial) every multiplier vector y in the
spectrahedron

    Y = { y : y_i >= 0 on inequality rows,  sum_i y_i Gamma_i >= 0,
              sum_i Tr(Gamma_i) y_i <= 1 }

gives one valid conic-quadratic cut in the original variables,

    t * ( y'beta + (sum_i y_i gamma_i)' z )  >=  x' (sum_i y_i Gamma_i) x,

evaluated here in multiplied-through form so zero denominators need no
special casing.  Separation maximizes the linearized violation over Y with a
cutting-plane loop on the eigenvector certificates of the semidefinite
condition.

The module also carries the closed-form special cases (two-variable coupled
quadratic, rank-one, choose-one), the rank-one strengthening coefficient
obtained by support enumeration, and a double-description converter from
vertex sets to facet systems for low-dimensional polytopes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .config import DEFAULT_TOLS, Tolerances
from .errors import (
    DegenerateT,
    DimensionMismatch,
    DimensionTooLarge,
    InfeasibleMultipliers,
    InfeasibleZ,
    InvalidParameters,
    NoConvergence,
)
from .linalg import column_space_basis, eig_sym, padded_submatrix_inverse, symmetrize
from .model import SolutionPoint, SupportFamily, indices_to_mask
from .polytope import VertexSet

__all__ = [
    "FacetSystem",
    "CutCoefficients",
    "hull_2x2_facets",
    "reference_order_to_storage_2x2",
    "eval_2x2_cut",
    "y_membership",
    "eval_projection_cut",
    "separate_cut",
    "max_cut_requirement",
    "hull_rank_one_lowerbound",
    "hull_rank_one_constrained",
    "hull_choose_one_lowerbound",
    "rank_one_hull_minimize",
    "choose_one_hull_minimize",
    "rank_one_gamma_bound",
    "facets_from_vertices",
    "mccormick_check_2x2",
    "cut_rows_for_extended_model",
]


@dataclass(frozen=True)
class FacetSystem:
    """Rows <Gamma_i, W> - gamma_i' z {<=,=} beta_i; the first m1 are <=."""

    gammas: tuple[np.ndarray, ...]
    gvecs: tuple[np.ndarray, ...]
    betas: tuple[float, ...]
    m1: int
    n: int
    w_dim: int

    def __post_init__(self):
        m = len(self.gammas)
        if not (len(self.gvecs) == len(self.betas) == m):
            raise DimensionMismatch("row lists have unequal lengths")
        if not 0 <= self.m1 <= m:
            raise ValueError("inequality count out of range")

    @property
    def m(self) -> int:
        return len(self.gammas)

    def row_value(self, i: int, z: np.ndarray, W: np.ndarray) -> float:
        return float((self.gammas[i] * W).sum() - self.gvecs[i] @ z)

    def satisfied(self, z: np.ndarray, W: np.ndarray, tol: float = 1e-8) -> bool:
        for i in range(self.m):
            v = self.row_value(i, z, W) - self.betas[i]
            if i < self.m1:
                if v > tol:
                    return False
            elif abs(v) > tol:
                return False
        return True

    def traces(self) -> np.ndarray:
        return np.array([float(np.trace(G)) for G in self.gammas])

    def aggregate(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
        """(sum y_i Gamma_i, sum y_i gamma_i, y'beta)."""
        G = np.zeros((self.w_dim, self.w_dim))
        g = np.zeros(self.n)
        for i, yi in enumerate(y):
            if yi != 0.0:
                G += yi * self.gammas[i]
                g += yi * self.gvecs[i]
        return G, g, float(np.asarray(self.betas) @ y)


@dataclass(frozen=True)
class CutCoefficients:
    """A multiplier vector over a FacetSystem's rows."""

    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float).reshape(-1))


# ---------------------------------------------------------------------------
# The coupled two-variable quadratic: Q = [[d1, -1], [-1, d2]], d1 d2 > 1.
# ---------------------------------------------------------------------------

# The reference description indexes rows y1..y6 with the two equalities
# first; storage is inequality-first, so positions map as follows.
_REFERENCE_2X2_TO_STORAGE = (4, 5, 0, 1, 2, 3)


def reference_order_to_storage_2x2(y_ref: Sequence[float]) -> np.ndarray:
    """Convert multipliers given in reference order (y1..y6) to storage order."""
    y = np.asarray(y_ref, dtype=float).reshape(-1)
    if y.shape != (6,):
        raise DimensionMismatch("expected six multipliers")
    out = np.zeros(6)
    for ref_pos, storage_pos in enumerate(_REFERENCE_2X2_TO_STORAGE):
        out[storage_pos] = y[ref_pos]
    return out


def hull_2x2_facets(d1: float, d2: float) -> FacetSystem:
    """Minimal facet system of the base polytope for the coupled 2x2 quadratic.

    Two equalities eliminate the diagonal of W; four inequalities bound the
    off-diagonal entry by 0 <= Delta*W12 <= min{z1, z2} and the lower
    McCormick branch.  Stored inequality-first; see
    :func:`reference_order_to_storage_2x2` for the classical y1..y6 ordering.
    """
    if d1 <= 0 or d2 <= 0 or d1 * d2 <= 1:
        raise InvalidParameters("need d1, d2 > 0 with d1*d2 > 1")
    delta = d1 * d2 - 1.0
    off_minus = np.array([[0.0, -0.5], [-0.5, 0.0]])
    off_plus = np.array([[0.0, 0.5], [0.5, 0.0]])
    rows = [
        # inequalities (reference order y3, y4, y5, y6)
        (off_minus, np.zeros(2), 0.0),
        (off_minus, np.array([-1.0 / delta, -1.0 / delta]), 1.0 / delta),
        (off_plus, np.array([1.0 / delta, 0.0]), 0.0),
        (off_plus, np.array([0.0, 1.0 / delta]), 0.0),
        # equalities (reference order y1, y2)
        (np.array([[1.0, -0.5 / d1], [-0.5 / d1, 0.0]]),
         np.array([1.0 / d1, 0.0]), 0.0),
        (np.array([[0.0, -0.5 / d2], [-0.5 / d2, 1.0]]),
         np.array([0.0, 1.0 / d2]), 0.0),
    ]
    return FacetSystem(
        gammas=tuple(r[0] for r in rows),
        gvecs=tuple(r[1] for r in rows),
        betas=tuple(r[2] for r in rows),
        m1=4,
        n=2,
        w_dim=2,
    )


def eval_2x2_cut(
    d1: float,
    d2: float,
    y_ref: Sequence[float],
    p: SolutionPoint,
    tol: float = 1e-9,
) -> float:
    """Multiplied-through slack of the closed-form two-variable cut.

    Multipliers are in reference order (y1..y6) and must satisfy the
    feasibility system: y >= 0, 4 y1 y2 >= (cross term)^2, y1 + y2 <= 1.
    Returns t*denominator - numerator; the cut holds iff this is >= -1e-8.
    """
    y = np.asarray(y_ref, dtype=float).reshape(-1)
    if y.shape != (6,):
        raise DimensionMismatch("expected six multipliers")
    if d1 <= 0 or d2 <= 0 or d1 * d2 <= 1:
        raise InvalidParameters("need d1, d2 > 0 with d1*d2 > 1")
    delta = d1 * d2 - 1.0
    y1, y2, y3, y4, y5, y6 = y
    cross = -y1 / d1 - y2 / d2 - y3 - y4 + y5 + y6
    if (np.any(y < -tol) or 4 * y1 * y2 < cross**2 - tol * (1 + cross**2)
            or y1 + y2 > 1 + tol):
        raise InfeasibleMultipliers("multipliers violate the feasibility system")
    x1, x2 = p.x
    z1, z2 = p.z
    numer = y1 * x1**2 + y2 * x2**2 + cross * x1 * x2
    denom = (y4 / delta + (y1 / d1 - y4 / delta + y5 / delta) * z1
             + (y2 / d2 - y4 / delta + y6 / delta) * z2)
    return float(p.t * denom - numer)


# ---------------------------------------------------------------------------
# The multiplier spectrahedron and the projected cut family.
# ---------------------------------------------------------------------------


def y_membership(fs: FacetSystem, y: np.ndarray,
                 tols: Tolerances = DEFAULT_TOLS) -> bool:
    """Whether y lies in the spectrahedron of valid cut multipliers."""
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape != (fs.m,):
        raise DimensionMismatch(f"expected {fs.m} multipliers, got {y.shape[0]}")
    if fs.m1 and np.any(y[: fs.m1] < -tols.psd):
        return False
    if float(fs.traces() @ y) > 1.0 + 1e-9:
        return False
    G, _, _ = fs.aggregate(y)
    lam, _ = eig_sym(symmetrize(G, check=False), tols)
    return not (lam.size and lam[0] < -tols.psd)


def eval_projection_cut(
    fs: FacetSystem,
    y: CutCoefficients | np.ndarray,
    p: SolutionPoint,
    x_eff: np.ndarray | None = None,
    tols: Tolerances = DEFAULT_TOLS,
) -> float:
    """Multiplied-through slack  t*denom - x'(sum y Gamma)x  of one cut.

    ``x_eff`` substitutes for x when the system lives in a factor space (pass
    F'x there).  A denominator below -1e-9 cannot arise on hull points, and
    is reported as an infinite violation.
    """
    yv = y.y if isinstance(y, CutCoefficients) else np.asarray(y, dtype=float)
    if not y_membership(fs, yv, tols):
        raise InfeasibleMultipliers("multipliers outside the spectrahedron")
    x = p.x if x_eff is None else np.asarray(x_eff, dtype=float).reshape(-1)
    if x.shape != (fs.w_dim,):
        raise DimensionMismatch(f"cut expects a length-{fs.w_dim} vector")
    G, g, ybeta = fs.aggregate(yv)
    denom = ybeta + float(g @ p.z)
    if denom < -1e-9:
        return -math.inf
    return float(p.t * denom - x @ G @ x)


def _spectrahedron_data(fs, psd_rows, cap):
    """Standard form for the multiplier LP with the current eigenvector rows.

    Free (equality-row) multipliers are split into differences of
    nonnegatives so the all-zero point is a basic feasible start.
    """
    from .formulations import LinearModel
    from .solver.simplex import prepare_standard_form

    m = fs.m
    model = LinearModel()
    expand = []  # (column, sign) pairs per multiplier
    for i in range(m):
        if i < fs.m1:
            expand.append(((model.add_variable(f"y{i}", 0.0, cap), 1.0),))
        else:
            pos = model.add_variable(f"y{i}_pos", 0.0, cap)
            neg = model.add_variable(f"y{i}_neg", 0.0, cap)
            expand.append(((pos, 1.0), (neg, -1.0)))

    def row_coeffs(dense):
        out = {}
        for i in range(m):
            if dense[i] != 0.0:
                for col, sign in expand[i]:
                    out[col] = sign * dense[i]
        return out

    traces = fs.traces()
    model.add_row(row_coeffs(traces), "<=", 1.0, "trace_budget")
    # l1 normalization: scaling a violated multiplier keeps it violated, so
    # bounding the scale loses nothing and keeps the cutting planes local
    model.add_row({j: 1.0 for j in range(model.n_vars)}, "<=",
                  64.0 * max(1.0, float(m)), "norm_budget")
    for k, row in enumerate(psd_rows):
        model.add_row(row_coeffs(row), ">=", 0.0, f"psd_{k}")
    model.set_objective({})
    return prepare_standard_form(model), expand


def _max_violation_over_y(fs, objective, cap, tols, max_rounds=200,
                          psd_rows=None, cache=None):
    """Maximize objective'y over the spectrahedron by eigenvector cuts.

    Returns (value, y, psd_rows).  ``cache`` (a dict) keeps the assembled LP
    across calls that share the row set, so bisection loops pay only for the
    objective swap.
    """
    from .solver.simplex import simplex_solve

    rows = psd_rows if psd_rows is not None else []
    for _ in range(max_rounds):
        if cache is not None and cache.get("n_rows") == len(rows):
            data, expand = cache["data"]
        else:
            data, expand = _spectrahedron_data(fs, rows, cap)
            if cache is not None:
                cache["n_rows"] = len(rows)
                cache["data"] = (data, expand)
        c = np.zeros(data.n_struct)
        for i in range(fs.m):
            for col, sign in expand[i]:
                c[col] = -sign * objective[i]
        sol = simplex_solve(data, tols, c_override=c)
        if not sol.is_optimal:
            raise NoConvergence(f"spectrahedron LP came back {sol.status}")
        y = np.array([sum(sign * sol.primal[col] for col, sign in expand[i])
                      for i in range(fs.m)])
        G, _, _ = fs.aggregate(y)
        lam, vecs = eig_sym(symmetrize(G, check=False), tols)
        # half the membership slack, so returned multipliers always pass it
        if not lam.size or lam[0] >= -0.5 * tols.psd:
            return -sol.value, y, rows
        v = vecs[:, 0]
        rows.append(np.array([float(v @ Gi @ v) for Gi in fs.gammas]))
    raise NoConvergence("eigenvector cutting planes did not close the cone")


def separate_cut(
    fs: FacetSystem,
    p: SolutionPoint,
    x_eff: np.ndarray | None = None,
    tols: Tolerances = DEFAULT_TOLS,
    cap: float = 1e6,
) -> CutCoefficients | None:
    """Most-violated cut multipliers at a point, or None if no cut separates.

    Maximizes  sum_i y_i (-beta_i - gamma_i'z + <Gamma_i, xx'>/t)  over the
    spectrahedron.  Requires t > 0; the ray t <= 0 with x != 0 is already cut
    by t >= 0 and is reported as DegenerateT.
    """
    x = p.x if x_eff is None else np.asarray(x_eff, dtype=float).reshape(-1)
    if x.shape != (fs.w_dim,):
        raise DimensionMismatch(f"separation expects a length-{fs.w_dim} vector")
    if p.t <= 1e-12:
        if float(np.abs(x).max(initial=0.0)) <= 1e-12:
            return None  # the origin satisfies every cut with slack zero
        raise DegenerateT("t <= 0 with x != 0 is separated by t >= 0 itself")
    xxT = np.outer(x, x)
    objective = np.array([
        -fs.betas[i] - float(fs.gvecs[i] @ p.z) + float((fs.gammas[i] * xxT).sum()) / p.t
        for i in range(fs.m)
    ])
    value, y, _ = _max_violation_over_y(fs, objective, cap, tols)
    # a multiplier with lambda_min(G) >= -psd/2 can fake a violation of up to
    # psd/2 * |x|^2 / t at a true hull point; stay above that noise floor
    noise = 0.5 * tols.psd * float(x @ x) / max(p.t, 1e-12)
    if value <= tols.cut_slack + noise:
        return None
    return CutCoefficients(y)


def max_cut_requirement(
    fs: FacetSystem,
    x: np.ndarray,
    z: np.ndarray,
    t_hi: float,
    tols: Tolerances = DEFAULT_TOLS,
    cap: float = 1e6,
    bisect_tol: float = 1e-7,
) -> float:
    """Supremum over the spectrahedron of the fractional cut bound on t.

    Uses that the linearized violation at level t is decreasing in t, so the
    supremum is the smallest t no cut separates; found by bisection reusing
    the accumulated eigenvector rows across levels.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    z = np.asarray(z, dtype=float).reshape(-1)
    if float(np.abs(x).max(initial=0.0)) <= 1e-14:
        return 0.0
    xxT = np.outer(x, x)
    quad = np.array([float((G * xxT).sum()) for G in fs.gammas])
    lin = np.array([-fs.betas[i] - float(fs.gvecs[i] @ z) for i in range(fs.m)])
    rows: list[np.ndarray] = []
    cache: dict = {}

    def violation(s: float) -> float:
        # linearized violation at level t = 1/s; convex nondecreasing in s
        nonlocal rows
        value, _, rows = _max_violation_over_y(
            fs, lin + s * quad, cap, tols, psd_rows=rows, cache=cache)
        return value

    s_neg = 1.0 / max(t_hi, bisect_tol)
    f_neg = violation(s_neg)
    for _ in range(200):
        if f_neg <= tols.cut_slack:
            break
        s_neg *= 0.25
        f_neg = violation(s_neg)
    else:
        raise NoConvergence("no finite cut level found")
    if abs(f_neg) <= tols.cut_slack and quad.max(initial=0.0) <= 0.0:
        return 0.0
    s_pos = s_neg * 4.0
    f_pos = violation(s_pos)
    for _ in range(200):
        if f_pos > tols.cut_slack:
            break
        s_neg, f_neg = s_pos, f_pos
        s_pos *= 4.0
        f_pos = violation(s_pos)
    else:
        return 0.0  # no multiplier ever separates: the bound on t is vacuous
    # Illinois secant on the bracket [s_neg, s_pos]
    side = 0
    for _ in range(200):
        t_lo, t_hi_cur = 1.0 / s_pos, 1.0 / s_neg
        if t_hi_cur - t_lo <= bisect_tol * (1.0 + t_hi_cur):
            break
        s_mid = s_pos - f_pos * (s_neg - s_pos) / (f_neg - f_pos)
        if not (min(s_neg, s_pos) < s_mid < max(s_neg, s_pos)):
            s_mid = 0.5 * (s_neg + s_pos)
        f_mid = violation(s_mid)
        if f_mid > tols.cut_slack:
            s_pos, f_pos = s_mid, f_mid
            if side == +1:
                f_neg *= 0.5
            side = +1
        else:
            s_neg, f_neg = s_mid, f_mid
            if side == -1:
                f_pos *= 0.5
            side = -1
    return 1.0 / s_pos


# ---------------------------------------------------------------------------
# Closed-form hull bounds for the special structures.
# ---------------------------------------------------------------------------


def _ratio(num: float, den: float) -> float:
    """num/den with the 0/0 = 0 and pos/0 = +inf conventions."""
    if den > 0.0:
        return num / den
    return 0.0 if num <= 0.0 else math.inf


def hull_rank_one_lowerbound(h: np.ndarray, p: SolutionPoint) -> float:
    """Tight lower bound on t for the rank-one hull: (h'x)^2 / min{1, sum z}."""
    h = np.asarray(h, dtype=float).reshape(-1)
    if np.any(h == 0.0):
        raise InvalidParameters("rank-one hull requires all h_i nonzero")
    s = float(h @ p.x) ** 2
    den = min(1.0, float(p.z.sum()))
    return _ratio(s, max(den, 0.0))


def hull_rank_one_constrained(
    h: np.ndarray, z_facets: Sequence[np.ndarray]
) -> Callable[[SolutionPoint], float]:
    """Evaluator of the strengthened rank-one bound under indicator facets.

    Each supplied row gamma' z >= 1 (valid once the zero pattern is excluded)
    contributes the cut t >= (h'x)^2 / (gamma'z); together with the plain
    t >= (h'x)^2 the binding bound divides by min(1, min_i gamma_i'z).
    """
    h = np.asarray(h, dtype=float).reshape(-1)
    rows = [np.asarray(g, dtype=float).reshape(-1) for g in z_facets]

    def evaluate(p: SolutionPoint) -> float:
        s = float(h @ p.x) ** 2
        den = 1.0
        for g in rows:
            den = min(den, float(g @ p.z))
        return _ratio(s, max(den, 0.0))

    return evaluate


def hull_choose_one_lowerbound(Q: np.ndarray, p: SolutionPoint,
                               tol: float = 1e-9) -> float:
    """Tight lower bound on t for the choose-one hull: sum_i Q_ii x_i^2 / z_i."""
    Q = symmetrize(Q)
    if float(p.z.sum()) > 1.0 + tol:
        raise InfeasibleZ(f"sum z = {p.z.sum():.6g} exceeds one")
    if np.any(p.z < -tol):
        raise InfeasibleZ("negative indicator value")
    total = 0.0
    for i in range(Q.shape[0]):
        term = _ratio(Q[i, i] * p.x[i] ** 2, max(float(p.z[i]), 0.0))
        if term == math.inf:
            return math.inf
        total += term
    return total


def rank_one_hull_minimize(h: np.ndarray, a: np.ndarray, b: np.ndarray,
                           offset: float = 0.0) -> float:
    """Exact minimum of a'x + b'z + t/2 over the rank-one hull, z in [0,1]^n.

    Requires a in span(h) (the problem is unbounded otherwise).  After
    minimizing over x with s = h'x free, the reduced objective
    b'z - alpha^2/2 * min(1, sum z) is piecewise linear and solved directly.
    """
    h = np.asarray(h, dtype=float).reshape(-1)
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    alpha = float(h @ a) / float(h @ h)
    if np.abs(a - alpha * h).max(initial=0.0) > 1e-9 * (1 + np.abs(a).max(initial=0.0)):
        raise InvalidParameters("a outside span(h): hull minimization is unbounded")
    negative = b[b < 0.0]
    base = float(negative.sum())
    extra = 0.0 if negative.size else (float(b.min()) if b.size else 0.0)
    return min(0.0, base + extra - 0.5 * alpha**2) + offset


def choose_one_hull_minimize(Q: np.ndarray, a: np.ndarray, b: np.ndarray,
                             offset: float = 0.0) -> float:
    """Exact minimum of a'x + b'z + t/2 over the choose-one hull.

    For fixed z the inner x-minimization is separable with value
    -a_i^2 z_i / (2 Q_ii); the resulting z-problem is linear over the simplex.
    """
    Q = symmetrize(Q)
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    scores = b - a**2 / (2.0 * np.diag(Q))
    return min(0.0, float(scores.min(initial=0.0))) + offset


# ---------------------------------------------------------------------------
# Rank-one strengthening coefficient by support enumeration.
# ---------------------------------------------------------------------------


def rank_one_gamma_bound(
    Q: np.ndarray,
    support: SupportFamily,
    T: Sequence[int],
    hT: np.ndarray,
    tols: Tolerances = DEFAULT_TOLS,
) -> tuple[float, tuple[int, ...]]:
    """Smallest valid coefficient for  <h_T h_T', W> <= gamma * 1_T'z.

    gamma is the maximum over admissible supports S meeting T of
    <h_T h_T', padded_inverse(Q, S)> / |S & T|; ties break toward the smaller
    bitmask, and the maximizing support is returned for face-dimension use.
    """
    Q = symmetrize(Q)
    n = Q.shape[0]
    T = tuple(sorted(int(i) for i in T))
    h = np.asarray(hT, dtype=float).reshape(-1)
    if h.shape != (n,):
        raise DimensionMismatch("hT must be a full-length padded vector")
    if any(h[i] != 0.0 for i in range(n) if i not in T):
        raise InvalidParameters("hT must vanish outside T")
    tset = set(T)
    best = 0.0
    best_mask = None
    best_support: tuple[int, ...] = ()
    for combo in support.iter_index_tuples(n):
        overlap = sum(1 for i in combo if i in tset)
        if overlap == 0:
            continue
        W = padded_submatrix_inverse(Q, combo, tols)
        val = float(h @ W @ h) / overlap
        mask = indices_to_mask(combo)
        if best_mask is None or val > best or (val == best and mask < best_mask):
            best = val
            best_mask = mask
            best_support = combo
    return max(best, 0.0), best_support


# ---------------------------------------------------------------------------
# Double description: vertex set -> facet system.
# ---------------------------------------------------------------------------


def _rref_rows(M: np.ndarray, tol: float = 1e-9) -> list[np.ndarray]:
    """Reduced row-echelon rows spanning the row space of M (deterministic)."""
    R = np.array(M, dtype=float)
    rows, cols = R.shape
    out_row = 0
    for col in range(cols):
        if out_row >= rows:
            break
        pivot = out_row + int(np.argmax(np.abs(R[out_row:, col])))
        if abs(R[pivot, col]) <= tol:
            continue
        R[[out_row, pivot]] = R[[pivot, out_row]]
        R[out_row] = R[out_row] / R[out_row, col]
        for r in range(rows):
            if r != out_row and R[r, col] != 0.0:
                R[r] -= R[r, col] * R[out_row]
        out_row += 1
    return [R[r] for r in range(out_row)]


def _snap_row(coef: np.ndarray, rhs: float) -> tuple[np.ndarray, float, bool]:
    """Try to snap a normalized row onto small rationals (denominator <= 720)."""
    scale = float(np.abs(coef).max(initial=0.0))
    if scale == 0.0:
        return coef, rhs, False
    cand = np.concatenate([coef, [rhs]]) / scale
    fracs = []
    for v in cand:
        f = Fraction(v).limit_denominator(720)
        if abs(float(f) - v) > 1e-7:
            return coef, rhs, False
        fracs.append(f)
    lcm = 1
    for f in fracs:
        lcm = lcm * f.denominator // math.gcd(lcm, f.denominator)
    ints = [int(f * lcm) for f in fracs]
    g = 0
    for v in ints:
        g = math.gcd(g, abs(v))
    if g > 0:
        ints = [v // g for v in ints]
    out = np.array(ints[:-1], dtype=float)
    return out, float(ints[-1]), True


def facets_from_vertices(
    vs: VertexSet,
    tols: Tolerances = DEFAULT_TOLS,
    max_dim: int = 10,
) -> FacetSystem:
    """Facet system of conv(vertex set), for affine dimension at most max_dim.

    Works in affine-hull coordinates: equalities come from the orthogonal
    complement of the hull, inequality facets from hyperplanes spanned by
    d-subsets of vertices with all remaining vertices on one side.
    Coefficients within 1e-7 of a rational with denominator <= 720 are
    snapped, so clean closed-form descriptions are reproduced exactly.
    """
    coords = vs.coordinates()
    V, amb = coords.shape
    v0 = coords[0]
    diffs = (coords - v0).T  # amb x V
    basis = column_space_basis(diffs, tols)
    d = basis.shape[1]
    if d > max_dim:
        raise DimensionTooLarge(f"affine dimension {d} exceeds {max_dim}")
    if d >= 1 and math.comb(V, d) > 2_000_000:
        raise DimensionTooLarge(
            f"{V} vertices in dimension {d} need {math.comb(V, d)} "
            "hyperplane candidates; beyond the enumeration guard")
    scale = 1.0 + float(np.abs(coords).max(initial=0.0))

    rows_eq: list[tuple[np.ndarray, float]] = []
    if d < amb:
        from .linalg import _orthogonal_complement

        comp = _orthogonal_complement(basis, amb, tols)
        # canonical echelon form of the normal space: orthonormal bases carry
        # an arbitrary rotation, echelon rows recover the printed rationals
        for u in _rref_rows(comp.T):
            rows_eq.append((u, float(u @ v0)))

    rows_ineq: list[tuple[np.ndarray, float]] = []
    if d >= 1 and V > d:
        U = (coords - v0) @ basis  # V x d
        side_tol = 1e-9 * scale
        seen: set[tuple] = set()
        for subset in itertools.combinations(range(V), d):
            P = U[list(subset)]
            if d == 1:
                g = np.ones(1)
            else:
                D = P[1:] - P[0]
                lam, vecs = eig_sym(symmetrize(D.T @ D, check=False), tols)
                # need nullity exactly one: the subset spans a hyperplane
                if lam[0] > 1e-9 * max(1.0, float(lam[-1])):
                    continue
                if lam.size >= 2 and lam[1] <= 1e-9 * max(1.0, float(lam[-1])):
                    continue
                g = vecs[:, 0]
            c = float(g @ P[0])
            vals = U @ g
            if np.all(vals <= c + side_tol):
                pass
            elif np.all(vals >= c - side_tol):
                g, c, vals = -g, -c, -vals
            else:
                continue
            # tight set must affinely span the hyperplane (facet, not face)
            tight = np.abs(vals - c) <= side_tol
            if tight.sum() < d:
                continue
            Ut = U[tight]
            if d > 1:
                span = column_space_basis((Ut[1:] - Ut[0]).T, tols).shape[1]
                if span < d - 1:
                    continue
            key = tuple(np.round(np.concatenate([g, [c]]) / max(
                np.abs(g).max(), 1e-12), 9))
            if key in seen:
                continue
            seen.add(key)
            rows_ineq.append((basis @ g, c + float((basis @ g) @ v0)))

    def to_row(coef: np.ndarray, rhs: float):
        coef, rhs, snapped = _snap_row(coef, rhs)
        zeta = coef[: vs.n]
        omega = coef[vs.n:]
        G = np.zeros((vs.w_dim, vs.w_dim))
        iu = np.triu_indices(vs.w_dim)
        for k, (i, j) in enumerate(zip(*iu)):
            if i == j:
                G[i, i] = omega[k]
            else:
                G[i, j] = G[j, i] = 0.5 * omega[k]
        return G, -zeta, rhs

    gammas, gvecs, betas = [], [], []
    order = sorted(range(len(rows_ineq)),
                   key=lambda k: tuple(np.round(rows_ineq[k][0], 9)) + (rows_ineq[k][1],))
    for k in order:
        G, gv, beta = to_row(*rows_ineq[k])
        gammas.append(G)
        gvecs.append(gv)
        betas.append(beta)
    m1 = len(gammas)
    for coef, rhs in rows_eq:
        G, gv, beta = to_row(coef, rhs)
        gammas.append(G)
        gvecs.append(gv)
        betas.append(beta)
    fs = FacetSystem(tuple(gammas), tuple(gvecs), tuple(betas), m1, vs.n, vs.w_dim)
    for v in vs.vertices:
        if not fs.satisfied(v.z, v.W, tol=1e-7 * scale):
            raise NoConvergence("facet system rejects one of its own vertices")
    return fs


def mccormick_check_2x2(d1: float, d2: float,
                        tols: Tolerances = DEFAULT_TOLS,
                        n_objectives: int = 50, seed: int = 0) -> bool:
    """Whether the bilinear-envelope description matches the vertex hull.

    The base polytope for the coupled 2x2 quadratic is parameterized by
    (z1, z2, w) with W determined affinely; the envelope rows are
    max{0, z1 + z2 - 1} <= Delta w <= min{z1, z2}.  Verified by vertex
    containment plus LP equivalence over random objectives.
    """
    if d1 * d2 <= 1:
        raise InvalidParameters("need d1*d2 > 1")
    from .formulations import LinearModel
    from .solver.simplex import simplex_solve

    delta = d1 * d2 - 1.0
    vertices = {
        (0.0, 0.0): 0.0,
        (1.0, 0.0): 0.0,
        (0.0, 1.0): 0.0,
        (1.0, 1.0): 1.0 / delta,
    }
    rng = np.random.default_rng(seed)
    for _ in range(n_objectives):
        C = symmetrize(rng.standard_normal((2, 2)), check=False)
        c = rng.standard_normal(2)
        best = -math.inf
        for (z1, z2), w in vertices.items():
            W = np.array([[(z1 + w) / d1, w], [w, (z2 + w) / d2]])
            best = max(best, float((C * W).sum() + c @ np.array([z1, z2])))
        model = LinearModel()
        model.add_variable("z1", 0.0, 1.0)
        model.add_variable("z2", 0.0, 1.0)
        model.add_variable("w", -math.inf, math.inf)
        model.add_row({2: delta}, ">=", 0.0, "w_nonneg")
        model.add_row({0: -1.0, 1: -1.0, 2: delta}, ">=", -1.0, "w_lower")
        model.add_row({0: -1.0, 2: delta}, "<=", 0.0, "w_le_z1")
        model.add_row({1: -1.0, 2: delta}, "<=", 0.0, "w_le_z2")
        # objective <C, W(z, w)> + c'z expanded in (z1, z2, w)
        coef_z1 = C[0, 0] / d1 + c[0]
        coef_z2 = C[1, 1] / d2 + c[1]
        coef_w = C[0, 0] / d1 + C[1, 1] / d2 + 2 * C[0, 1]
        model.set_objective({0: -coef_z1, 1: -coef_z2, 2: -coef_w})
        sol = simplex_solve(model, tols)
        if not sol.is_optimal:
            return False
        if abs(-sol.value - best) > 1e-8 * (1 + abs(best)):
            return False
    return True


def cut_rows_for_extended_model(
    fs: FacetSystem, ys: Sequence[np.ndarray]
) -> list[tuple[np.ndarray, np.ndarray, float]]:
    """Aggregated facet rows <G, W> - g'z <= ybeta, one per multiplier vector.

    Each returned triple is valid for the base polytope whenever the facet
    system is, so the rows can strengthen the extended linear relaxation.
    """
    out = []
    for y in ys:
        G, g, ybeta = fs.aggregate(np.asarray(y, dtype=float))
        out.append((G, g, ybeta))
    return out
