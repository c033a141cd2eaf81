import numpy as np
import pytest

from hullkit.model import (
    FactorizedInstance,
    MiqoInstance,
    SupportFamily,
    brute_force_solve,
    gen_random_psd,
)
from hullkit.polytope import (
    check_technical_condition,
    dimension_estimate,
    enumerate_vertices,
    enumerate_vertices_factorized,
    verify_trace_equalities,
    vertex_objective_minimum,
)

# Rank-two factor on three variables used in several regressions:
# F' = [[1, 1, 1], [0, 0, 1]].
F3 = np.array([[1.0, 0.0], [1.0, 0.0], [1.0, 1.0]])


def two_by_two(d1, d2):
    return np.array([[d1, -1.0], [-1.0, d2]])


def hypercube_instance(Q):
    n = Q.shape[0]
    return MiqoInstance(Q, np.zeros(n), np.zeros(n), SupportFamily.hypercube())


def expected_2x2_vertices(d1, d2):
    delta = d1 * d2 - 1.0
    return {
        0b00: np.zeros((2, 2)),
        0b01: np.array([[1.0 / d1, 0.0], [0.0, 0.0]]),
        0b10: np.array([[0.0, 0.0], [0.0, 1.0 / d2]]),
        0b11: np.array([[d2, 1.0], [1.0, d1]]) / delta,
    }


class TestCanonicalVertices:
    @pytest.mark.parametrize("d1,d2", [(2.0, 3.0), (2.0, 2.0), (5.0, 0.3)])
    def test_two_by_two_closed_form(self, d1, d2):
        vs = enumerate_vertices(hypercube_instance(two_by_two(d1, d2)))
        expected = expected_2x2_vertices(d1, d2)
        assert len(vs) == 4
        for v in vs.vertices:
            assert np.abs(v.W - expected[v.mask]).max() <= 1e-12

    def test_numeric_instantiation(self):
        vs = enumerate_vertices(hypercube_instance(two_by_two(2.0, 3.0)))
        full = [v for v in vs.vertices if v.mask == 0b11][0]
        assert np.abs(full.W - np.array([[0.6, 0.2], [0.2, 0.4]])).max() <= 1e-12

    def test_explicit_empty_only(self):
        inst = MiqoInstance(two_by_two(2.0, 3.0), np.zeros(2), np.zeros(2),
                            SupportFamily.explicit([0]))
        vs = enumerate_vertices(inst)
        assert len(vs) == 1
        assert vs.vertices[0].mask == 0
        assert np.all(vs.vertices[0].W == 0.0)

    def test_trace_equalities_hand_case(self):
        Q = two_by_two(2.0, 3.0)
        vs = enumerate_vertices(hypercube_instance(Q))
        report = verify_trace_equalities(Q, vs)
        assert report.passed
        assert report.max_violation <= 1e-12

    def test_trace_violation_is_linear_in_perturbation(self):
        from hullkit.polytope import PolytopeVertex, VertexSet

        Q = two_by_two(2.0, 3.0)
        vs = enumerate_vertices(hypercube_instance(Q))
        v = vs.vertices[1]  # support {0}
        W = v.W.copy()
        W[0, 0] += 1e-3
        bad = VertexSet((PolytopeVertex(v.mask, v.z, W),), "canonical", 2, 2)
        report = verify_trace_equalities(Q, bad)
        # (W Q)_00 moves by Q_00 * 1e-3 = 2e-3 exactly.
        assert abs(report.max_violation - 2e-3) <= 1e-12

    def test_eigenvalue_order_and_entry_bound(self):
        # Padded inverses are dominated by the full inverse, and their
        # entries never exceed its largest eigenvalue.
        rng = np.random.default_rng(21)
        for trial in range(10):
            n = int(rng.integers(2, 7))
            Q = gen_random_psd(n, seed=500 + trial, diag_dominance=0.5)
            Qinv = np.linalg.inv(Q)
            lam_max = np.linalg.eigvalsh(Qinv)[-1]
            vs = enumerate_vertices(hypercube_instance(Q))
            for v in vs.vertices:
                assert np.linalg.eigvalsh(Qinv - v.W)[0] >= -1e-8
                assert np.abs(v.W).max(initial=0.0) <= lam_max + 1e-9


class TestFactorizedVertices:
    def test_projection_table(self):
        inst = FactorizedInstance(F3, np.zeros(3), np.zeros(3), SupportFamily.hypercube())
        vs = enumerate_vertices_factorized(inst)
        assert len(vs) == 8
        half = np.full((2, 2), 0.5)
        e11 = np.array([[1.0, 0.0], [0.0, 0.0]])
        expected = {
            0b000: np.zeros((2, 2)),
            0b001: e11,
            0b010: e11,
            0b011: e11,
            0b100: half,
            0b101: np.eye(2),
            0b110: np.eye(2),
            0b111: np.eye(2),
        }
        for v in vs.vertices:
            assert np.abs(v.W - expected[v.mask]).max() <= 1e-12

    def test_rank_one_scalar(self):
        inst = FactorizedInstance(np.array([1.0, 2.0]), np.zeros(2), np.zeros(2),
                                  SupportFamily.hypercube())
        vs = enumerate_vertices_factorized(inst)
        for v in vs.vertices:
            assert v.W.shape == (1, 1)
            assert abs(v.W[0, 0] - (1.0 if v.mask else 0.0)) <= 1e-12

    def test_projection_properties(self):
        rng = np.random.default_rng(4)
        for trial in range(10):
            n = int(rng.integers(1, 7))
            k = int(rng.integers(1, n + 1))
            F = rng.standard_normal((n, k))
            inst = FactorizedInstance(F, np.zeros(n), np.zeros(n),
                                      SupportFamily.hypercube())
            for v in enumerate_vertices_factorized(inst).vertices:
                assert np.abs(v.W - v.W.T).max() <= 1e-8
                assert np.abs(v.W @ v.W - v.W).max() <= 1e-8
                lam = np.linalg.eigvalsh(v.W)
                assert np.all((np.abs(lam) <= 1e-7) | (np.abs(lam - 1) <= 1e-7))


class TestDimension:
    def test_two_by_two_is_three_dimensional(self):
        vs = enumerate_vertices(hypercube_instance(two_by_two(2.0, 3.0)))
        assert dimension_estimate(vs) == 3

    def test_dense_three_by_three(self):
        Q = gen_random_psd(3, seed=11, diag_dominance=0.5)
        vs = enumerate_vertices(hypercube_instance(Q))
        assert dimension_estimate(vs) == 6

    def test_single_vertex(self):
        inst = MiqoInstance(two_by_two(2.0, 3.0), np.zeros(2), np.zeros(2),
                            SupportFamily.explicit([0]))
        assert dimension_estimate(enumerate_vertices(inst)) == 0

    def test_upper_bound(self):
        rng = np.random.default_rng(3)
        for trial in range(8):
            n = int(rng.integers(1, 6))
            Q = gen_random_psd(n, seed=900 + trial, diag_dominance=0.4)
            vs = enumerate_vertices(hypercube_instance(Q))
            assert dimension_estimate(vs) <= n * (n + 1) // 2


class TestTechnicalCondition:
    def test_full_support_always_passes(self):
        rng = np.random.default_rng(17)
        for trial in range(8):
            n = int(rng.integers(1, 6))
            k = int(rng.integers(1, n + 1))
            F = rng.standard_normal((n, k))
            masks = [0, (1 << n) - 1] + [int(m) for m in rng.integers(0, 1 << n, 3)]
            inst = FactorizedInstance(F, np.zeros(n), np.zeros(n),
                                      SupportFamily.explicit(masks))
            assert check_technical_condition(inst)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_choose_one_rank_one_fails(self, n):
        rng = np.random.default_rng(n)
        h = rng.uniform(0.5, 2.0, n) * rng.choice([-1.0, 1.0], n)
        inst = FactorizedInstance(h, np.zeros(n), np.zeros(n),
                                  SupportFamily.choose_one())
        assert not check_technical_condition(inst)

    def test_identity_factor(self):
        inst = FactorizedInstance(np.eye(3), np.zeros(3), np.zeros(3),
                                  SupportFamily.explicit([0, 0b101]))
        assert check_technical_condition(inst)


class TestVertexObjective:
    def test_matches_brute_force(self):
        # Minimizing <-aa'/2, W> + b'z over the vertices is the enumeration
        # oracle's own closed form, so the values must agree exactly.
        rng = np.random.default_rng(33)
        for trial in range(10):
            n = int(rng.integers(1, 7))
            Q = gen_random_psd(n, seed=700 + trial, diag_dominance=0.5)
            a = rng.standard_normal(n)
            b = rng.standard_normal(n)
            inst = MiqoInstance(Q, a, b, SupportFamily.hypercube(),
                                offset=float(rng.standard_normal()))
            vs = enumerate_vertices(inst)
            val, veet = vertex_objective_minimum(vs, -0.5 * np.outer(a, a), b,
                                                 inst.offset)
            res = brute_force_solve(inst)
            assert abs(val - res.value) <= 1e-9 * (1 + abs(res.value))
            assert veet.mask == sum(1 << i for i in res.support)
