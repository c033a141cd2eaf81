import math

import numpy as np
import pytest

from hullkit.formulations import LinearModel
from hullkit.solver import simplex_solve


def build(vars_, rows, obj, const=0.0):
    """vars_: list of (name, lb, ub); rows: list of (coeff dict by name, rel, rhs)."""
    m = LinearModel()
    for name, lb, ub in vars_:
        m.add_variable(name, lb, ub)
    for coeffs, rel, rhs in rows:
        m.add_row({m.var_index(k): v for k, v in coeffs.items()}, rel, rhs)
    m.set_objective({m.var_index(k): v for k, v in obj.items()}, const)
    return m


class TestHandLps:
    def test_simplex_corner(self):
        m = build([("x1", 0, math.inf), ("x2", 0, math.inf)],
                  [({"x1": 1, "x2": 1}, "<=", 1.0)],
                  {"x1": -1, "x2": -1})
        sol = simplex_solve(m)
        assert sol.is_optimal
        assert abs(sol.value - (-1.0)) <= 1e-9
        assert abs(sol.primal.sum() - 1.0) <= 1e-9

    def test_unbounded(self):
        m = build([("x1", 0, math.inf)], [], {"x1": -1})
        assert simplex_solve(m).status == "unbounded"

    def test_infeasible(self):
        m = build([("x1", 0, math.inf)],
                  [({"x1": 1}, "<=", 0.0), ({"x1": 1}, ">=", 1.0)],
                  {"x1": 1})
        assert simplex_solve(m).status == "infeasible"

    def test_equality_and_free_variable(self):
        # min x + y  s.t.  x + y = 2, x - y >= -4, y free, x in [0, 10]
        m = build([("x", 0, 10), ("y", -math.inf, math.inf)],
                  [({"x": 1, "y": 1}, "=", 2.0), ({"x": 1, "y": -1}, ">=", -4.0)],
                  {"x": 1, "y": 1})
        sol = simplex_solve(m)
        assert sol.is_optimal
        assert abs(sol.value - 2.0) <= 1e-9

    def test_negative_bounds_and_constant(self):
        m = build([("x", -2, -1)], [], {"x": 3}, const=10.0)
        sol = simplex_solve(m)
        assert sol.is_optimal
        assert abs(sol.value - 4.0) <= 1e-12  # x = -2

    def test_bound_flip_path(self):
        # maximizing pushes x to its upper bound with no rows at all
        m = build([("x", -1, 2)], [], {"x": -1})
        sol = simplex_solve(m)
        assert abs(sol.value - (-2.0)) <= 1e-12

    def test_degenerate_cycling_guard(self):
        # classic Beale-style degenerate LP; Bland fallback must terminate
        m = build(
            [("x1", 0, math.inf), ("x2", 0, math.inf),
             ("x3", 0, math.inf), ("x4", 0, math.inf)],
            [({"x1": 0.25, "x2": -8, "x3": -1, "x4": 9}, "<=", 0.0),
             ({"x1": 0.5, "x2": -12, "x3": -0.5, "x4": 3}, "<=", 0.0),
             ({"x3": 1}, "<=", 1.0)],
            {"x1": -0.75, "x2": 150, "x3": -0.02, "x4": 6},
        )
        sol = simplex_solve(m)
        assert sol.is_optimal
        # optimum -0.77 at x = (1, 0, 1, 0), cross-checked with HiGHS
        assert abs(sol.value - (-0.77)) <= 1e-9


def random_feasible_lp(rng, n, m):
    """LP with a known feasible point, mixed relations and bounds."""
    model = LinearModel()
    lb = rng.uniform(-2.0, 0.0, n)
    ub = lb + rng.uniform(0.5, 3.0, n)
    free = rng.random(n) < 0.2
    for j in range(n):
        if free[j]:
            model.add_variable(f"x{j}", -math.inf, math.inf)
        else:
            model.add_variable(f"x{j}", lb[j], ub[j])
    x0 = np.where(free, rng.uniform(-1, 1, n), lb + (ub - lb) * rng.random(n))
    A = rng.standard_normal((m, n))
    slackness = rng.uniform(0.0, 1.5, m)
    rels = rng.choice(["<=", ">=", "="], m, p=[0.5, 0.3, 0.2])
    for i in range(m):
        rhs = float(A[i] @ x0)
        rel = rels[i]
        if rel == "<=":
            rhs += slackness[i]
        elif rel == ">=":
            rhs -= slackness[i]
        model.add_row({j: float(A[i, j]) for j in range(n)}, rel, rhs)
    # objective bounded over the box; free vars get zero cost half the time
    c = rng.standard_normal(n)
    c[free & (rng.random(n) < 0.5)] = 0.0
    model.set_objective({j: float(c[j]) for j in range(n)},
                        float(rng.standard_normal()))
    return model, x0


class TestRandomDuality:
    def test_duality_on_random_feasible_lps(self):
        rng = np.random.default_rng(2024)
        solved = 0
        while solved < 200:
            n = int(rng.integers(2, 9))
            m = int(rng.integers(1, 7))
            model, x0 = random_feasible_lp(rng, n, m)
            sol = simplex_solve(model)
            if sol.status == "unbounded":
                continue  # free variables can legitimately make it unbounded
            assert sol.is_optimal  # feasible by construction
            assert abs(sol.value - sol.dual_value) <= 1e-7 * (1 + abs(sol.value))
            # primal feasibility at the reported point
            for row in model.rows:
                lhs = sum(c * sol.primal[j] for j, c in row.coeffs.items())
                if row.relation == "<=":
                    assert lhs <= row.rhs + 1e-8
                elif row.relation == ">=":
                    assert lhs >= row.rhs - 1e-8
                else:
                    assert abs(lhs - row.rhs) <= 1e-8
            lo = model.lower_bounds()
            hi = model.upper_bounds()
            assert np.all(sol.primal >= lo - 1e-8)
            assert np.all(sol.primal <= hi + 1e-8)
            # objective really is what the model says
            direct = sum(c * sol.primal[j] for j, c in model.objective.items())
            assert abs(sol.value - (direct + model.constant)) <= 1e-9 * (1 + abs(sol.value))
            solved += 1

    def test_matches_scipy_on_batch(self):
        scipy_lp = pytest.importorskip("scipy.optimize").linprog
        rng = np.random.default_rng(7)
        checked = 0
        while checked < 40:
            n = int(rng.integers(2, 7))
            m = int(rng.integers(1, 6))
            model, _ = random_feasible_lp(rng, n, m)
            sol = simplex_solve(model)
            if not sol.is_optimal:
                continue
            A_ub, b_ub, A_eq, b_eq = [], [], [], []
            for row in model.rows:
                dense = np.zeros(n)
                for j, c in row.coeffs.items():
                    dense[j] = c
                if row.relation == "<=":
                    A_ub.append(dense); b_ub.append(row.rhs)
                elif row.relation == ">=":
                    A_ub.append(-dense); b_ub.append(-row.rhs)
                else:
                    A_eq.append(dense); b_eq.append(row.rhs)
            c = np.zeros(n)
            for j, v in model.objective.items():
                c[j] = v
            res = scipy_lp(
                c,
                A_ub=np.array(A_ub) if A_ub else None,
                b_ub=np.array(b_ub) if b_ub else None,
                A_eq=np.array(A_eq) if A_eq else None,
                b_eq=np.array(b_eq) if b_eq else None,
                bounds=[(model.variables[j].lb if np.isfinite(model.variables[j].lb) else None,
                         model.variables[j].ub if np.isfinite(model.variables[j].ub) else None)
                        for j in range(n)],
                method="highs",
            )
            assert res.status == 0
            assert abs(sol.value - (res.fun + model.constant)) <= 1e-6 * (1 + abs(sol.value))
            checked += 1
