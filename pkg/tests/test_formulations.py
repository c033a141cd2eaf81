import io
import math

import numpy as np
import pytest

from hullkit.errors import NotPositiveDefinite, ParseError, UnsupportedSupportFamily
from hullkit.formulations import (
    LinearModel,
    big_m_constants,
    build_milo,
    milo_variable_layout,
    milo_vertex_solution,
    natural_bound_heuristic,
    perspective_delta,
    read_lp_string,
    relax,
    write_lp_string,
)
from hullkit.model import MiqoInstance, SupportFamily, gen_random_psd
from hullkit.polytope import enumerate_vertices
from hullkit.solver import simplex_solve
from hullkit.model import brute_force_solve

Q22 = np.array([[2.0, -1.0], [-1.0, 3.0]])


def instance22(support=None):
    return MiqoInstance(Q22, np.array([-1.0, -1.0]), np.array([0.1, 0.1]),
                        support or SupportFamily.hypercube())


class TestBigM:
    def test_identity(self):
        data = big_m_constants(np.eye(3))
        assert data.lambda_max_inv == pytest.approx(1.0, abs=1e-12)
        assert data.max_row_norm == pytest.approx(1.0, abs=1e-12)
        assert data.M == pytest.approx(1.0, abs=1e-12)

    def test_two_by_two(self):
        data = big_m_constants(Q22)
        lam = (5 + math.sqrt(5)) / 10
        assert data.lambda_max_inv == pytest.approx(lam, abs=1e-12)
        assert data.max_row_norm == pytest.approx(math.sqrt(10), abs=1e-12)
        assert data.M == pytest.approx(lam * math.sqrt(10), abs=1e-12)

    def test_scaling_invariance(self):
        # lambda_max((cQ)^{-1}) scales by 1/c and row norms by c, so M is
        # invariant under positive scaling.
        for c in (0.25, 2.0, 7.5):
            assert big_m_constants(c * Q22).M == pytest.approx(
                big_m_constants(Q22).M, rel=1e-12)

    def test_rejects_singular(self):
        with pytest.raises(NotPositiveDefinite):
            big_m_constants(np.array([[1.0, 1.0], [1.0, 1.0]]))


class TestMiloStructure:
    def test_counts_n2(self):
        m = build_milo(instance22())
        assert m.n_vars == 5  # 2 z + 3 upper-triangle W
        kinds = {}
        for row in m.rows:
            kinds.setdefault(row.name.split("_")[0], []).append(row)
        assert len(kinds["trace"]) == 2
        assert len(kinds["offdiag"]) == 4   # 2 ordered pairs, two sides each
        assert len(kinds["cap"]) == 8       # 2 rows per diagonal, 4 per pair

    def test_vertices_are_feasible(self):
        rng = np.random.default_rng(0)
        for trial in range(6):
            n = int(rng.integers(2, 5))
            Q = gen_random_psd(n, seed=40 + trial, diag_dominance=0.6)
            inst = MiqoInstance(Q, rng.standard_normal(n), rng.standard_normal(n),
                                SupportFamily.hypercube())
            m = build_milo(inst)
            for v in enumerate_vertices(inst).vertices:
                x, _ = milo_vertex_solution(inst, tuple(
                    i for i in range(n) if v.mask >> i & 1))
                for row in m.rows:
                    lhs = sum(c * x[j] for j, c in row.coeffs.items())
                    if row.relation == "<=":
                        assert lhs <= row.rhs + 1e-8
                    elif row.relation == ">=":
                        assert lhs >= row.rhs - 1e-8
                    else:
                        assert abs(lhs - row.rhs) <= 1e-8

    def test_vertex_objective_matches_enumeration_formula(self):
        inst = instance22()
        res = brute_force_solve(inst)
        x, val = milo_vertex_solution(inst, res.support)
        assert val == pytest.approx(res.value, abs=1e-12)

    def test_fixed_integral_z_pins_w(self):
        rng = np.random.default_rng(5)
        for trial in range(5):
            n = int(rng.integers(2, 5))
            Q = gen_random_psd(n, seed=80 + trial, diag_dominance=0.6)
            inst = MiqoInstance(Q, rng.standard_normal(n), np.zeros(n),
                                SupportFamily.hypercube())
            model = relax(build_milo(inst))
            mask = int(rng.integers(0, 1 << n))
            support = tuple(i for i in range(n) if mask >> i & 1)
            expected, _ = milo_vertex_solution(inst, support)
            lb = model.lower_bounds()
            ub = model.upper_bounds()
            for i in range(n):
                lb[i] = ub[i] = 1.0 if mask >> i & 1 else 0.0
            # two different objectives must land on the same W
            for sign in (1.0, -1.0):
                probe = model.copy()
                probe.set_objective({j: sign * v for j, v in
                                     enumerate(np.sin(np.arange(model.n_vars)))}, 0.0)
                from hullkit.solver.simplex import prepare_standard_form
                sol = simplex_solve(prepare_standard_form(probe),
                                    lb_override=lb, ub_override=ub)
                assert sol.is_optimal
                assert np.abs(sol.primal - expected).max() <= 1e-7

    def test_relaxation_lower_bounds_optimum(self):
        rng = np.random.default_rng(9)
        for trial in range(20):
            n = int(rng.integers(2, 6))
            Q = gen_random_psd(n, seed=300 + trial, diag_dominance=0.5)
            support = [SupportFamily.hypercube(),
                       SupportFamily.cardinality_at_most(max(1, n // 2)),
                       SupportFamily.choose_one()][trial % 3]
            inst = MiqoInstance(Q, rng.standard_normal(n),
                                np.abs(rng.standard_normal(n)), support,
                                offset=float(rng.standard_normal()))
            sol = simplex_solve(relax(build_milo(inst)))
            opt = brute_force_solve(inst).value
            assert sol.is_optimal
            assert sol.value <= opt + 1e-7 * (1 + abs(opt))

    def test_explicit_family_no_goods(self):
        inst = instance22(SupportFamily.explicit([0b00, 0b01, 0b11]))
        m = build_milo(inst)
        assert sum(1 for r in m.rows if r.name.startswith("nogood")) == 1

    def test_explicit_family_complement_guard(self):
        masks = list(range(10))          # complement of size 2^8 - 10 > 64
        inst = MiqoInstance(gen_random_psd(8, seed=1, diag_dominance=1.0),
                            np.zeros(8), np.zeros(8),
                            SupportFamily.explicit(masks))
        with pytest.raises(UnsupportedSupportFamily):
            build_milo(inst)

    def test_relax_clears_integrality(self):
        m = build_milo(instance22())
        assert any(v.integer for v in m.variables)
        r = relax(m)
        assert not any(v.integer for v in r.variables)
        assert [v.lb for v in r.variables] == [v.lb for v in m.variables]


class TestBaselineHelpers:
    def test_natural_bounds_zero_a(self):
        inst = MiqoInstance(Q22, np.zeros(2), np.zeros(2), SupportFamily.hypercube())
        assert np.all(natural_bound_heuristic(inst) == 0.0)

    def test_natural_bounds_identity(self):
        inst = MiqoInstance(np.eye(2), np.array([-1.0, -2.0]), np.zeros(2),
                            SupportFamily.hypercube())
        assert np.allclose(natural_bound_heuristic(inst), [10.0, 10.0])

    def test_natural_bounds_scale_with_a(self):
        inst1 = MiqoInstance(Q22, np.array([-1.0, 0.5]), np.zeros(2),
                             SupportFamily.hypercube())
        inst2 = MiqoInstance(Q22, np.array([-2.0, 1.0]), np.zeros(2),
                             SupportFamily.hypercube())
        assert np.allclose(2 * natural_bound_heuristic(inst1),
                           natural_bound_heuristic(inst2))

    def test_perspective_delta(self):
        assert perspective_delta(np.eye(3)) == pytest.approx(1.0, abs=1e-12)
        assert perspective_delta(Q22) == pytest.approx((5 - math.sqrt(5)) / 2,
                                                       abs=1e-12)
        assert perspective_delta(np.array([[1.0, 1.0], [1.0, 1.0]])) == 0.0


class TestLpFormat:
    def roundtrip(self, model):
        text1 = write_lp_string(model)
        model2 = read_lp_string(text1)
        text2 = write_lp_string(model2)
        assert text1 == text2
        return model2

    def test_bounds_only_model(self):
        m = LinearModel()
        m.add_variable("x", -1.5, 2.5)
        m.set_objective({0: 1.0})
        m2 = self.roundtrip(m)
        assert m2.variables[0].lb == -1.5
        assert m2.variables[0].ub == 2.5

    def test_milo_roundtrip_exact(self):
        model = build_milo(instance22())
        m2 = self.roundtrip(model)
        assert [v.name for v in m2.variables] == [v.name for v in model.variables]
        assert np.array_equal(m2.lower_bounds(), model.lower_bounds())
        assert np.array_equal(m2.upper_bounds(), model.upper_bounds())
        assert m2.integer_indices() == model.integer_indices()
        assert len(m2.rows) == len(model.rows)
        for r1, r2 in zip(model.rows, m2.rows):
            assert r1.relation == r2.relation
            assert r1.rhs == r2.rhs
            assert r1.coeffs == r2.coeffs
        assert m2.objective == model.objective
        assert m2.constant == model.constant

    def test_free_and_fixed_bounds(self):
        m = LinearModel()
        m.add_variable("u", -math.inf, math.inf)
        m.add_variable("v", 3.0, 3.0)
        m.add_row({0: 1.0, 1: -2.0}, ">=", -1.0)
        m.set_objective({0: 1.0, 1: 1.0}, 4.5)
        m2 = self.roundtrip(m)
        assert m2.variables[0].lb == -math.inf
        assert m2.variables[0].ub == math.inf
        assert m2.variables[1].lb == 3.0 == m2.variables[1].ub
        assert m2.constant == 4.5

    def test_name_collision_rejected(self):
        m = LinearModel()
        m.add_variable("x")
        with pytest.raises(ValueError):
            m.add_variable("x")

    def test_malformed_relation(self):
        text = "Minimize\n obj: x\nSubject To\n c0: 2 x ! 4\nEnd\n"
        with pytest.raises(ParseError):
            read_lp_string(text)

    def test_empty_file(self):
        with pytest.raises(ParseError):
            read_lp_string("")
        with pytest.raises(ParseError):
            read_lp_string("\\ only a comment\n")

    def test_constraint_missing_relation(self):
        with pytest.raises(ParseError) as err:
            read_lp_string("Minimize\n obj: x\nSubject To\n c0: 2 x\nEnd\n")
        assert err.value.line >= 1

    def test_file_io(self, tmp_path):
        from hullkit.formulations import read_lp_file, write_lp_file

        model = build_milo(instance22())
        path = tmp_path / "model.lp"
        write_lp_file(model, path)
        again = read_lp_file(path)
        assert write_lp_string(again) == write_lp_string(model)
        buf = io.StringIO()
        write_lp_file(model, buf)
        assert read_lp_file(io.StringIO(buf.getvalue())).n_vars == model.n_vars
