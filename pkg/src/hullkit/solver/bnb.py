"""Best-bound branch and bound over a LinearModel with integer flags.

Node selection is best-bound with node id as the tie break; branching picks
the most fractional integer variable (lowest index on ties).  Each node's LP
reuses the standard form assembled once at the root with per-node bound
overrides on the integer variables, so the search is deterministic for a
fixed model.  An optional ``incumbent_hook`` lets callers convert a node's
fractional point into a feasible solution (rounding against problem
structure); it tightens pruning but never changes correctness.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..config import DEFAULT_TOLS, Tolerances
from ..formulations import LinearModel
from .simplex import prepare_standard_form, simplex_solve

__all__ = ["BnbResult", "branch_and_bound"]


@dataclass
class BnbResult:
    status: str               # 'optimal' | 'time_limit' | 'infeasible' | 'unbounded'
    value: float
    incumbent: np.ndarray | None
    nodes: int
    root_bound: float

    @property
    def is_optimal(self) -> bool:
        return self.status == "optimal"


def branch_and_bound(
    model: LinearModel,
    time_limit: float = 60.0,
    tols: Tolerances = DEFAULT_TOLS,
    incumbent_hook: Callable[[np.ndarray], tuple[float, np.ndarray] | None] | None = None,
) -> BnbResult:
    """Solve the mixed-integer model to optimality or the time limit.

    Integer variables must carry finite bounds.  Nodes are counted at
    creation; the root is node 1.
    """
    int_idx = np.array(model.integer_indices(), dtype=int)
    lb0 = model.lower_bounds()
    ub0 = model.upper_bounds()
    if int_idx.size and not (
        np.all(np.isfinite(lb0[int_idx])) and np.all(np.isfinite(ub0[int_idx]))
    ):
        raise ValueError("integer variables must have finite bounds")
    data = prepare_standard_form(model)
    deadline = time.monotonic() + time_limit
    itol = tols.integrality

    incumbent_value = math.inf
    incumbent: np.ndarray | None = None
    nodes_created = 1
    next_id = 1
    root_bound = -math.inf
    # heap entries: (bound, node_id, lb, ub)
    heap: list[tuple[float, int, np.ndarray, np.ndarray]] = [
        (-math.inf, 0, lb0.copy(), ub0.copy())
    ]
    root = True
    saw_time_limit = False

    while heap:
        bound, _, lb, ub = heapq.heappop(heap)
        if bound >= incumbent_value - tols.bnb_prune:
            break  # best-bound order: everything left is dominated
        if time.monotonic() > deadline:
            saw_time_limit = True
            break
        sol = simplex_solve(data, tols, lb_override=lb, ub_override=ub)
        if sol.status == "unbounded":
            if root:
                return BnbResult("unbounded", -math.inf, None, nodes_created, -math.inf)
            root = False
            continue  # an unbounded node of a bounded MIP cannot happen with finite z-bounds
        if root:
            root_bound = sol.value if sol.status == "optimal" else math.inf
            if sol.status == "infeasible":
                return BnbResult("infeasible", math.inf, None, nodes_created, root_bound)
            root = False
        if sol.status == "infeasible":
            continue
        if sol.value >= incumbent_value - tols.bnb_prune:
            continue
        x = sol.primal
        if int_idx.size:
            frac = np.abs(x[int_idx] - np.round(x[int_idx]))
            fractional = frac > itol
        else:
            frac = np.zeros(0)
            fractional = np.zeros(0, dtype=bool)
        if not fractional.any():
            if sol.value < incumbent_value - 1e-12:
                incumbent_value = sol.value
                incumbent = x.copy()
            continue
        if incumbent_hook is not None:
            heur = incumbent_hook(x)
            if heur is not None and heur[0] < incumbent_value - 1e-12:
                incumbent_value, incumbent = heur[0], heur[1].copy()
                if sol.value >= incumbent_value - tols.bnb_prune:
                    continue
        # branch on the most fractional integer variable (lowest index tie)
        dist = np.where(fractional, np.abs(frac - 0.5), math.inf)
        j_local = int(np.argmin(dist))
        j = int(int_idx[j_local])
        xj = x[j]
        lo_child = lb.copy()
        hi_child = ub.copy()
        hi_child[j] = math.floor(xj + itol)
        lo2 = lb.copy()
        ub2 = ub.copy()
        lo2[j] = math.ceil(xj - itol)
        for clb, cub in ((lo_child, hi_child), (lo2, ub2)):
            if clb[j] > cub[j] + 1e-12:
                continue
            nodes_created += 1
            heapq.heappush(heap, (sol.value, next_id, clb, cub))
            next_id += 1

    if saw_time_limit:
        return BnbResult("time_limit", incumbent_value, incumbent, nodes_created,
                         root_bound)
    if incumbent is None:
        return BnbResult("infeasible", math.inf, None, nodes_created, root_bound)
    return BnbResult("optimal", incumbent_value, incumbent, nodes_created, root_bound)
