"""Two-phase primal simplex for dense models with variable bounds.

The working representation keeps a full tableau B^{-1} A over all columns
(structural variables, one slack per inequality row, and an artificial for
each row whose slack cannot host the initial residual) plus a maintained
reduced-cost row, updated by BLAS rank-one pivots.  Nonbasic variables rest
at a finite bound (or at zero when free); an entering step is limited by the
basic variables' opposite bounds and by the entering variable's own span,
and when the span wins the step is a bound flip with no basis change.

Pivoting is deterministic: most-violated reduced cost with lowest-index tie
break; the minimum-ratio leaving choice treats rows as tied when snapping
them to their bound would move a value by at most ``lp_ratio_tie``, filters
out relatively tiny pivot elements, then takes the lowest variable index;
Bland's rule engages after ``lp_degenerate_cap`` consecutive degenerate
steps.  The tableau is refactorized exactly every ``lp_refresh_every``
pivots (stretched to one refactorization per m pivots on large models),
before accepting any suspiciously small pivot, and before claiming
optimality; the final point and row duals always come from a fresh dense
solve of the final basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

try:  # in-place rank-1 update avoids a 2x-size temporary per pivot
    from scipy.linalg.blas import dger as _blas_dger
except ImportError:  # pragma: no cover - scipy is a declared dependency
    _blas_dger = None

from ..config import DEFAULT_TOLS, Tolerances
from ..errors import NoConvergence, NumericalBreakdown
from ..formulations import LinearModel

__all__ = ["LpSolution", "SimplexData", "prepare_standard_form", "simplex_solve"]

_AT_LO, _AT_HI, _BASIC, _FREE_NB = 0, 1, 2, 3


@dataclass
class LpSolution:
    status: str                 # 'optimal' | 'infeasible' | 'unbounded'
    value: float
    primal: np.ndarray          # structural variables
    dual: np.ndarray            # one multiplier per row
    reduced_costs: np.ndarray   # structural reduced costs
    dual_value: float
    iterations: int

    @property
    def is_optimal(self) -> bool:
        return self.status == "optimal"


@dataclass
class SimplexData:
    """Standard form assembled once per model; bounds may be overridden per solve.

    Artificial columns are not materialized here: each solve appends one only
    for rows whose slack cannot host the initial residual.
    """

    n_struct: int
    m: int
    A: np.ndarray             # m x (structural + slack) columns
    b: np.ndarray
    c: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    slack_of_row: np.ndarray  # column index or -1
    constant: float
    relations: list[str]


def prepare_standard_form(model: LinearModel) -> SimplexData:
    n = model.n_vars
    m = len(model.rows)
    n_slack = sum(1 for r in model.rows if r.relation != "=")
    N = n + n_slack
    A = np.zeros((m, N))
    b = np.zeros(m)
    lo = np.full(N, -math.inf)
    hi = np.full(N, math.inf)
    lo[:n] = model.lower_bounds()
    hi[:n] = model.upper_bounds()
    slack_of_row = np.full(m, -1, dtype=int)
    s = n
    for i, row in enumerate(model.rows):
        for j, coef in row.coeffs.items():
            A[i, j] = coef
        b[i] = row.rhs
        if row.relation == "<=":
            A[i, s] = 1.0
            lo[s], hi[s] = 0.0, math.inf
            slack_of_row[i] = s
            s += 1
        elif row.relation == ">=":
            A[i, s] = 1.0
            lo[s], hi[s] = -math.inf, 0.0
            slack_of_row[i] = s
            s += 1
    c = np.zeros(N)
    for j, coef in model.objective.items():
        c[j] = coef
    return SimplexData(
        n_struct=n, m=m, A=A, b=b, c=c, lo=lo, hi=hi,
        slack_of_row=slack_of_row,
        constant=model.constant, relations=[r.relation for r in model.rows],
    )


def simplex_solve(
    model_or_data: LinearModel | SimplexData,
    tols: Tolerances = DEFAULT_TOLS,
    lb_override: np.ndarray | None = None,
    ub_override: np.ndarray | None = None,
    max_iterations: int | None = None,
    c_override: np.ndarray | None = None,
) -> LpSolution:
    if isinstance(model_or_data, LinearModel):
        data = prepare_standard_form(model_or_data)
    else:
        data = model_or_data
    return _Simplex(data, tols, lb_override, ub_override, max_iterations,
                    c_override).run()


class _Simplex:
    def __init__(self, data, tols, lb_override, ub_override, max_iterations,
                 c_override=None):
        self.d = data
        self.tols = tols
        self.m = data.m
        self.N = data.A.shape[1]
        self.lo = data.lo.copy()
        self.hi = data.hi.copy()
        if lb_override is not None:
            self.lo[: data.n_struct] = lb_override
        if ub_override is not None:
            self.hi[: data.n_struct] = ub_override
        self.c_base = data.c
        if c_override is not None:
            self.c_base = data.c.copy()
            self.c_base[: data.n_struct] = c_override
        self.max_iterations = max_iterations or (2000 + 100 * (self.m + self.N))
        self.iterations = 0
        self.art_cols = np.zeros(0, dtype=int)
        self.refresh_interval = tols.lp_refresh_every

    # -- setup ------------------------------------------------------------

    def _initialize(self):
        d = self.d
        lo, hi = self.lo, self.hi
        base_N = d.A.shape[1]
        status = np.full(base_N, _AT_LO, dtype=np.int8)
        vals = np.zeros(base_N)
        finite_lo = np.isfinite(lo)
        finite_hi = np.isfinite(hi)
        vals[finite_lo] = lo[finite_lo]
        at_hi = ~finite_lo & finite_hi
        vals[at_hi] = hi[at_hi]
        status[at_hi] = _AT_HI
        free = ~finite_lo & ~finite_hi
        vals[free] = 0.0
        status[free] = _FREE_NB

        basis = np.full(self.m, -1, dtype=int)
        resid = d.b - d.A[:, : d.n_struct] @ vals[: d.n_struct]
        art_rows = []
        art_signs = []
        for i in range(self.m):
            s = d.slack_of_row[i]
            if s >= 0:
                if lo[s] - 1e-12 <= resid[i] <= hi[s] + 1e-12:
                    basis[i] = s
                    status[s] = _BASIC
                    continue
                vals[s] = float(np.clip(resid[i], lo[s], hi[s]))
                status[s] = _AT_LO if vals[s] == lo[s] else _AT_HI
            gap = resid[i] - (d.A[i, s] * vals[s] if s >= 0 else 0.0)
            art_rows.append(i)
            art_signs.append(-1.0 if gap < 0 else 1.0)
        n_art = len(art_rows)
        if n_art:
            E = np.zeros((self.m, n_art))
            E[art_rows, np.arange(n_art)] = art_signs
            self.A = np.hstack([d.A, E])
            self.lo = np.concatenate([self.lo, np.zeros(n_art)])
            self.hi = np.concatenate([self.hi, np.full(n_art, math.inf)])
            status = np.concatenate([status, np.full(n_art, _BASIC, dtype=np.int8)])
            vals = np.concatenate([vals, np.zeros(n_art)])
            basis[art_rows] = base_N + np.arange(n_art)
        else:
            self.A = d.A.copy()
        self.art_cols = np.arange(base_N, base_N + n_art)
        self.N = self.A.shape[1]
        self.basis = basis
        self.status = status
        self.nb_value = vals
        self.since_refresh = 0
        self.refresh_interval = max(self.tols.lp_refresh_every, self.m)
        # starting basis is diagonal: row i scaled by its basic coefficient
        scale = self.A[np.arange(self.m), basis]
        self.T = np.asfortranarray(self.A / scale[:, None])
        nb_mask = status != _BASIC
        self.xB = (d.b - self.A @ np.where(nb_mask, vals, 0.0)) / scale

    # -- pricing ----------------------------------------------------------

    def _reduced_costs(self, c):
        zrow = c - c[self.basis] @ self.T
        zrow[self.basis] = 0.0
        return zrow

    def _entering(self, zrow, bland, banned=None):
        st = self.status
        tol = self.tols.lp_reduced_cost
        fixed = (self.lo == self.hi) & (st != _BASIC)
        viol = np.zeros(self.N)
        down = (st == _AT_LO) | (st == _FREE_NB)
        up = (st == _AT_HI) | (st == _FREE_NB)
        np.maximum(viol, np.where(down, -zrow, 0.0), out=viol)
        np.maximum(viol, np.where(up, zrow, 0.0), out=viol)
        viol[st == _BASIC] = 0.0
        viol[fixed] = 0.0
        if banned is not None:
            viol[banned] = 0.0
        candidates = np.flatnonzero(viol > tol)
        if candidates.size == 0:
            return -1, 0.0
        j = int(candidates[0]) if bland else int(np.argmax(viol))
        if st[j] == _AT_HI or (st[j] == _FREE_NB and zrow[j] > 0):
            return j, -1.0
        return j, 1.0

    def _refresh(self):
        """Recompute the tableau and basic values exactly from the basis.

        Rank-one updates drift; entries that should be zero come back as
        noise and, if ever used as pivots, wreck the basis.  A periodic
        dense refactorization resets the error to solver accuracy.
        """
        Bmat = self.A[:, self.basis]
        try:
            self.T = np.asfortranarray(np.linalg.solve(Bmat, self.A))
        except np.linalg.LinAlgError as exc:
            raise NumericalBreakdown("basis matrix became singular") from exc
        nb_mask = self.status != _BASIC
        x_nb = np.where(nb_mask, self.nb_value, 0.0)
        self.xB = np.linalg.solve(Bmat, self.d.b - self.A @ x_nb)
        self.since_refresh = 0

    def _ratio_test(self, j, direction):
        """Smallest blocking step: (theta, leaving_row or -1, is_bound_flip)."""
        g = direction * self.T[:, j]
        eps = self.tols.lp_ratio_eps
        lo_b = self.lo[self.basis]
        hi_b = self.hi[self.basis]
        theta = np.full(self.m, math.inf)
        pos = g > eps
        neg = g < -eps
        with np.errstate(invalid="ignore"):
            theta[pos] = (self.xB[pos] - lo_b[pos]) / g[pos]
            theta[neg] = (self.xB[neg] - hi_b[neg]) / g[neg]
        theta[~np.isfinite(theta)] = math.inf
        np.maximum(theta, 0.0, out=theta)
        theta_rows = float(theta.min(initial=math.inf))
        span = self.hi[j] - self.lo[j]
        self_cap = span if np.isfinite(span) else math.inf
        if theta_rows == math.inf and self_cap == math.inf:
            return math.inf, -1, False
        if self_cap < theta_rows:
            return self_cap, -1, True
        # ties are measured in value space: stepping by the minimum ratio and
        # snapping the leaving variable to its bound perturbs that variable by
        # (theta_i - theta_min) * |g_i|, which must stay within tolerance
        with np.errstate(invalid="ignore"):
            snap = np.where(np.isfinite(theta),
                            (theta - theta_rows) * np.abs(g), math.inf)
        tie = np.flatnonzero(snap <= self.tols.lp_ratio_tie)
        # stability filter: among tied rows, tiny pivot elements amplify
        # roundoff by 1/|pivot|, so restrict to comfortably large ones before
        # the lowest-index rule decides
        mags = np.abs(self.T[tie, j])
        strong = tie[mags >= 0.05 * float(mags.max())]
        leave = int(strong[np.argmin(self.basis[strong])])
        return theta_rows, leave, False

    # -- pivoting ---------------------------------------------------------

    def _apply_step(self, j, direction, theta, leave, flip, zrow):
        if theta > 0.0:
            self.xB -= direction * theta * self.T[:, j]
        if flip:
            # land exactly on the far bound; accumulated arithmetic may miss it
            self.status[j] = _AT_HI if self.status[j] == _AT_LO else _AT_LO
            self.nb_value[j] = self.hi[j] if self.status[j] == _AT_HI else self.lo[j]
            return
        r = leave
        pivot = self.T[r, j]
        if abs(pivot) < self.tols.lp_pivot_min:
            raise NumericalBreakdown(f"pivot {pivot:.2e} below threshold")
        old = self.basis[r]
        g_r = direction * pivot
        self.nb_value[old] = self.lo[old] if g_r > 0 else self.hi[old]
        self.status[old] = _AT_LO if g_r > 0 else _AT_HI
        enter_val = self.nb_value[j] + direction * theta
        row = self.T[r, :] / pivot
        col = self.T[:, j].copy()
        col[r] = 0.0
        if _blas_dger is not None and self.T.flags.f_contiguous:
            self.T = _blas_dger(-1.0, col, row, a=self.T, overwrite_a=1)
        else:
            self.T -= np.outer(col, row)
        self.T[r, :] = row
        if zrow[j] != 0.0:
            zrow -= zrow[j] * row
        zrow[j] = 0.0
        self.basis[r] = j
        self.status[j] = _BASIC
        self.xB[r] = enter_val

    def _loop(self, c, allow_unbounded):
        zrow = self._reduced_costs(c)
        degenerate = 0
        bland = False
        banned = np.zeros(self.N, dtype=bool)
        while True:
            if self.iterations >= self.max_iterations:
                raise NoConvergence(f"simplex exceeded {self.max_iterations} pivots")
            if self.since_refresh >= self.refresh_interval:
                self._refresh()
                zrow = self._reduced_costs(c)
            j, direction = self._entering(zrow, bland, banned)
            if j < 0:
                if self.since_refresh > 0:
                    # verify the claim against an exact tableau; bans were
                    # issued on exact tableaus and stay valid until a pivot
                    self._refresh()
                    zrow = self._reduced_costs(c)
                    j, direction = self._entering(zrow, bland, banned)
                if j < 0:
                    return "optimal"
            theta, leave, flip = self._ratio_test(j, direction)
            if not flip and leave >= 0:
                pivot = abs(self.T[leave, j])
                colmax = float(np.abs(self.T[:, j]).max())
                if pivot < max(10.0 * self.tols.lp_pivot_min, 1e-6 * colmax):
                    if self.since_refresh > 0:
                        # relatively tiny pivots are usually update noise:
                        # rebuild exactly and re-decide
                        self._refresh()
                        zrow = self._reduced_costs(c)
                    else:
                        # the tableau is exact: every blocking row for this
                        # column pivots unstably, so price something else
                        banned[j] = True
                    continue
            if theta == math.inf:
                if self.since_refresh > 0:
                    self._refresh()
                    zrow = self._reduced_costs(c)
                    continue
                if allow_unbounded:
                    return "unbounded"
                raise NumericalBreakdown("auxiliary objective unbounded below")
            self.iterations += 1
            self.since_refresh += 1
            self._apply_step(j, direction, theta, leave, flip, zrow)
            banned[:] = False
            if theta <= 1e-12:
                degenerate += 1
                if degenerate >= self.tols.lp_degenerate_cap:
                    bland = True
            else:
                degenerate = 0
                bland = False

    # -- driver -----------------------------------------------------------

    def run(self) -> LpSolution:
        d = self.d
        if np.any(self.lo[: d.n_struct] > self.hi[: d.n_struct] + 1e-12):
            return self._verdict("infeasible")
        self._initialize()
        arts = self.art_cols
        if arts.size:
            in_basis = np.isin(self.basis, arts)
            start_total = float(self.xB[in_basis].sum()) if in_basis.any() else 0.0
            if start_total > 1e-12:
                c1 = np.zeros(self.N)
                c1[arts] = 1.0
                self._loop(c1, allow_unbounded=False)
                in_basis = np.isin(self.basis, arts)
                art_total = float(self.xB[in_basis].sum()) if in_basis.any() else 0.0
                if art_total > 1e-7 * (1.0 + float(np.abs(d.b).max(initial=0.0))):
                    return self._verdict("infeasible")
            # pin artificials for phase 2; basic-at-zero ones may remain
            self.lo[arts] = 0.0
            self.hi[arts] = 0.0
        self.c_full = np.concatenate([self.c_base, np.zeros(self.N - self.c_base.size)])
        status = self._loop(self.c_full, allow_unbounded=True)
        if status == "unbounded":
            return self._verdict("unbounded")
        return self._finalize()

    def _verdict(self, status: str) -> LpSolution:
        n = self.d.n_struct
        return LpSolution(status, math.inf if status == "infeasible" else -math.inf,
                          np.zeros(n), np.zeros(self.m), np.zeros(n), 0.0,
                          self.iterations)

    def _finalize(self) -> LpSolution:
        d = self.d
        c = self.c_full
        nb_mask = self.status != _BASIC
        x = np.where(nb_mask, self.nb_value, 0.0)
        Bmat = self.A[:, self.basis]
        try:
            xB = np.linalg.solve(Bmat, d.b - self.A @ x)
            y = np.linalg.solve(Bmat.T, c[self.basis])
        except np.linalg.LinAlgError:
            xB = self.xB
            y = np.zeros(self.m)
        x[self.basis] = xB
        primal = x[: d.n_struct]
        value = float(c @ x + d.constant)
        red = c - self.A.T @ y
        dual_value = float(y @ d.b + d.constant)
        for j in np.flatnonzero(self.status != _BASIC):
            if x[j] != 0.0:
                dual_value += float(red[j] * x[j])
        return LpSolution("optimal", value, primal, y, red[: d.n_struct],
                          dual_value, self.iterations)
