"""Projected-gradient bounds for the convex baselines, and the gap metric.

Two relaxations of the indicator problem are handled here:

* the perspective bound, where for fixed z in the capped simplex the inner
  x-minimization of  x'(Q - dI)x/2 + a'x + d/2 * sum x_i^2/z_i  has the
  closed form  -a' B(z)^{-1} a / 2  with  B(z) = Q - dI + d diag(1/z);
* the "natural" big-M bound with z eliminated through z_i = |x_i| / M_i,
  a nonsmooth convex problem over a weighted l1 ball.

Both objectives are convex, so the final iterate certifies a true lower
bound: value minus the linear-minimization gap  max_{w feasible} g'(z - w),
computed in closed form over the respective feasible set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..config import DEFAULT_TOLS, Tolerances
from ..errors import InvalidDelta, UnsupportedSign
from ..linalg import cholesky, solve_cholesky
from ..model import MiqoInstance

__all__ = [
    "GapReport",
    "PerspectiveBound",
    "NaturalBound",
    "capped_simplex_project",
    "weighted_l1_project",
    "perspective_relaxation_bound",
    "natural_relaxation_bound",
    "gap_report",
]


def capped_simplex_project(v: np.ndarray, r: float) -> np.ndarray:
    """Euclidean projection onto {z in [0,1]^n : sum z <= r}.

    The KKT system reduces to a scalar threshold: z = clip(v - theta, 0, 1)
    with theta = 0 if the clipped point already fits, else the exact root of
    sum clip(v - theta, 0, 1) = r found over the breakpoint grid.
    """
    v = np.asarray(v, dtype=float).reshape(-1)
    if r < 0:
        raise ValueError("cap must be nonnegative")
    base = np.clip(v, 0.0, 1.0)
    if base.sum() <= r:
        return base
    if r == 0.0:
        return np.zeros_like(v)
    # s(theta) = sum clip(v - theta, 0, 1) is piecewise linear, decreasing,
    # with breakpoints at v_i and v_i - 1.
    points = np.unique(np.concatenate([v, v - 1.0]))
    lo_idx, hi_idx = 0, points.size - 1

    def s(theta: float) -> float:
        return float(np.clip(v - theta, 0.0, 1.0).sum())

    # binary search for the segment containing the root
    lo, hi = points[0], points[-1]
    while hi_idx - lo_idx > 1:
        mid = (lo_idx + hi_idx) // 2
        if s(points[mid]) > r:
            lo_idx = mid
        else:
            hi_idx = mid
    t0, t1 = points[lo_idx], points[hi_idx]
    s0, s1 = s(t0), s(t1)
    if s0 == s1:
        theta = t0
    else:
        theta = t0 + (s0 - r) * (t1 - t0) / (s0 - s1)
    return np.clip(v - theta, 0.0, 1.0)


def weighted_l1_project(v: np.ndarray, weights: np.ndarray, r: float) -> np.ndarray:
    """Euclidean projection onto {x : sum_i weights_i |x_i| <= r}, weights > 0.

    Soft threshold x_i = sign(v_i) max(|v_i| - theta w_i, 0) with theta the
    exact root of the piecewise-linear budget equation.
    """
    v = np.asarray(v, dtype=float).reshape(-1)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    if float(w @ np.abs(v)) <= r:
        return v.copy()
    if r <= 0.0:
        return np.zeros_like(v)
    # budget(theta) = sum w_i max(|v_i| - theta w_i, 0) has breakpoints |v_i|/w_i
    a = np.abs(v)
    bp = np.sort(a / w)

    def budget(theta: float) -> float:
        return float(w @ np.maximum(a - theta * w, 0.0))

    lo_idx, hi_idx = 0, bp.size - 1
    if budget(bp[0]) <= r:
        t0, t1 = 0.0, bp[0]
    else:
        while hi_idx - lo_idx > 1:
            mid = (lo_idx + hi_idx) // 2
            if budget(bp[mid]) > r:
                lo_idx = mid
            else:
                hi_idx = mid
        t0, t1 = bp[lo_idx], bp[hi_idx]
    b0, b1 = budget(t0), budget(t1)
    theta = t0 if b0 == b1 else t0 + (b0 - r) * (t1 - t0) / (b0 - b1)
    return np.sign(v) * np.maximum(a - theta * w, 0.0)


@dataclass(frozen=True)
class PerspectiveBound:
    certified: float     # valid lower bound: objective minus convexity gap
    objective: float     # raw objective at the final iterate
    gap: float           # linear-minimization (duality) gap at the iterate
    z: np.ndarray
    iterations: int
    converged: bool


@dataclass(frozen=True)
class NaturalBound:
    certified: float
    objective: float
    gap: float
    x: np.ndarray
    iterations: int
    converged: bool


def _cardinality_cap(inst: MiqoInstance) -> float:
    if inst.support.kind == "cardinality":
        return float(inst.support.r)
    if inst.support.kind == "hypercube":
        return float(inst.n)
    if inst.support.kind == "choose_one":
        return 1.0
    raise ValueError("relaxation bounds need a cardinality-type support family")


def perspective_relaxation_bound(
    inst: MiqoInstance, delta: float, tols: Tolerances = DEFAULT_TOLS
) -> PerspectiveBound:
    """Minimize the perspective-strengthened relaxation over the capped simplex.

    g(z) = -a' B(z)^{-1} a / 2 + b'z + offset,  B(z) = Q - dI + d diag(1/z),
    with gradient  dg/dz_i = b_i - d x_i^2 / (2 z_i^2)  at  x = -B(z)^{-1} a.
    Coordinates at zero are floored to 1e-9 inside the solve, which evaluates
    the correct limiting ratio x_i / z_i there (the huge diagonal keeps the
    system positive definite and well behaved).
    """
    n = inst.n
    from ..linalg import eig_sym

    lam_min = float(eig_sym(inst.Q, tols)[0][0])
    if delta < -1e-12 or delta > lam_min + 1e-9:
        raise InvalidDelta(f"delta={delta} outside [0, lambda_min={lam_min:.6g}]")
    delta = min(max(delta, 0.0), max(lam_min, 0.0))
    r = _cardinality_cap(inst)
    z_floor = 1e-9
    diag_idx = np.arange(n)

    def value_grad(z: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        z_eff = np.maximum(z, z_floor)
        B = inst.Q - delta * np.eye(n)
        B[diag_idx, diag_idx] += delta / z_eff
        L = cholesky(B, tols)
        x = solve_cholesky(L, -inst.a)
        # a'x = -a'B^{-1}a so the quadratic term is a'x/2
        val = float(0.5 * inst.a @ x + inst.b @ z + inst.offset)
        grad = inst.b - 0.5 * delta * (x / z_eff) ** 2
        return val, grad, x

    z = capped_simplex_project(np.full(n, min(1.0, r / max(n, 1))), r)
    z = np.maximum(z, 0.0)
    val, grad, x = value_grad(z)
    step = 1.0
    it = 0
    converged = False
    while it < tols.pg_max_iter:
        it += 1
        moved = capped_simplex_project(z - step * grad, r)
        direction = moved - z
        pg_norm = float(np.linalg.norm(
            z - capped_simplex_project(z - grad, r)
        ))
        if pg_norm <= tols.pg_grad:
            converged = True
            break
        new_val, new_grad, new_x = value_grad(moved)
        if new_val <= val + tols.pg_armijo * float(grad @ direction):
            z, val, grad, x = moved, new_val, new_grad, new_x
            step = min(step * 2.0, 1e6)
        else:
            step *= 0.5
            if step < 1e-14:
                break
    # Frank-Wolfe style certificate: min over the feasible set of the
    # linearization g(z) + grad'(w - z) is computable in closed form.
    lin_drop = _capped_simplex_linear_min(grad, r) - float(grad @ z)
    gap = max(0.0, -lin_drop)
    return PerspectiveBound(val - gap, val, gap, z, it, converged)


def _capped_simplex_linear_min(g: np.ndarray, r: float) -> float:
    """min g'w over {w in [0,1]^n, sum w <= r}: take the most negative
    coordinates, fractionally at the cap."""
    neg = np.sort(g[g < 0.0])
    take = min(float(len(neg)), r)
    full = int(math.floor(take))
    total = float(neg[:full].sum())
    if full < len(neg) and take > full:
        total += (take - full) * float(neg[full])
    return total


def natural_relaxation_bound(
    inst: MiqoInstance, bounds: np.ndarray, tols: Tolerances = DEFAULT_TOLS
) -> NaturalBound:
    """Lower bound for the big-M relaxation with z eliminated.

    Requires b >= 0 (so z_i = |x_i|/M_i is optimal) and positive bounds.
    Minimizes  x'Qx/2 + a'x + sum b_i |x_i|/M_i  over the weighted l1 ball
    sum |x_i|/M_i <= r  by projected subgradient with Armijo backtracking.
    """
    if np.any(inst.b < 0):
        raise UnsupportedSign("natural bound requires b >= 0")
    M = np.asarray(bounds, dtype=float).reshape(-1)
    if M.shape != (inst.n,) or np.any(M <= 0):
        raise ValueError("bounds must be positive, one per coordinate")
    r = _cardinality_cap(inst)
    w = 1.0 / M

    def value(x):
        return float(0.5 * x @ inst.Q @ x + inst.a @ x
                     + (inst.b * w) @ np.abs(x) + inst.offset)

    def subgrad(x):
        smooth = inst.Q @ x + inst.a
        kink = inst.b * w
        # minimal-norm subgradient: shrink the smooth part into the interval
        s = np.sign(x)
        g = smooth + s * kink
        at_zero = x == 0.0
        g[at_zero] = smooth[at_zero] - np.clip(smooth[at_zero],
                                               -kink[at_zero], kink[at_zero])
        return g

    x = np.zeros(inst.n)
    val = value(x)
    g = subgrad(x)
    step = 1.0
    it = 0
    converged = False
    while it < tols.pg_max_iter:
        it += 1
        moved = weighted_l1_project(x - step * g, w, r)
        pg_norm = float(np.linalg.norm(x - weighted_l1_project(x - g, w, r)))
        if pg_norm <= tols.pg_grad:
            converged = True
            break
        new_val = value(moved)
        if new_val <= val + tols.pg_armijo * float(g @ (moved - x)):
            x, val = moved, new_val
            g = subgrad(x)
            step = min(step * 2.0, 1e6)
        else:
            step *= 0.5
            if step < 1e-14:
                break
    lin = _weighted_l1_linear_min(g, w, r)
    gap = max(0.0, float(g @ x) - lin)
    return NaturalBound(val - gap, val, gap, x, it, converged)


def _weighted_l1_linear_min(g: np.ndarray, w: np.ndarray, r: float) -> float:
    """min g'v over {sum w_i |v_i| <= r} = -r * max_i |g_i| / w_i."""
    if g.size == 0:
        return 0.0
    return -r * float(np.max(np.abs(g) / w))


@dataclass(frozen=True)
class GapReport:
    formulation: str
    opt: float
    lower_bound: float
    gap_percent: float
    absolute_fallback: bool = False


def gap_report(opt: float, lb: float, name: str) -> GapReport:
    """Relative bound gap in percent: 100 (opt - lb) / |opt|.

    Near-zero optima fall back to the absolute gap, flagged on the report.
    """
    if abs(opt) > 1e-12:
        return GapReport(name, opt, lb, 100.0 * (opt - lb) / abs(opt))
    return GapReport(name, opt, lb, opt - lb, absolute_fallback=True)
