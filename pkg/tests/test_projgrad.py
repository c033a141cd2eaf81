import numpy as np
import pytest

from hullkit.errors import InvalidDelta, UnsupportedSign
from hullkit.formulations import natural_bound_heuristic, perspective_delta
from hullkit.model import MiqoInstance, SupportFamily, brute_force_solve, gen_random_psd
from hullkit.solver import (
    capped_simplex_project,
    gap_report,
    natural_relaxation_bound,
    perspective_relaxation_bound,
    weighted_l1_project,
)


class TestCappedSimplexProjection:
    def test_feasible_point_unchanged(self):
        v = np.array([0.2, 0.3, 0.0])
        assert np.array_equal(capped_simplex_project(v, 1.0), v)

    def test_kkt_threshold_example(self):
        got = capped_simplex_project(np.array([0.9, 0.8, -0.2]), 1.0)
        assert np.abs(got - np.array([0.55, 0.45, 0.0])).max() <= 1e-10

    def test_zero_cap(self):
        assert np.array_equal(capped_simplex_project(np.array([0.5, -1.0]), 0.0),
                              np.zeros(2))

    def test_variational_inequality(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            n = int(rng.integers(1, 9))
            r = float(rng.uniform(0.0, n))
            v = rng.normal(0.0, 2.0, n)
            p = capped_simplex_project(v, r)
            assert np.all(p >= -1e-12) and np.all(p <= 1 + 1e-12)
            assert p.sum() <= r + 1e-10
            for _ in range(20):
                w = rng.random(n)
                w *= min(1.0, r / max(w.sum(), 1e-12)) * rng.random()
                assert (v - p) @ (w - p) <= 1e-9


class TestWeightedL1Projection:
    def test_inside_ball_unchanged(self):
        v = np.array([0.1, -0.2])
        w = np.array([1.0, 2.0])
        assert np.array_equal(weighted_l1_project(v, w, 1.0), v)

    def test_variational_inequality(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = int(rng.integers(1, 8))
            w = rng.uniform(0.2, 3.0, n)
            r = float(rng.uniform(0.1, 2.0))
            v = rng.normal(0.0, 2.0, n)
            p = weighted_l1_project(v, w, r)
            assert w @ np.abs(p) <= r + 1e-9
            for _ in range(20):
                u = rng.normal(0.0, 1.0, n)
                u *= r / max(w @ np.abs(u), 1e-12) * rng.random()
                assert (v - p) @ (u - p) <= 1e-8


class TestPerspectiveBound:
    def test_delta_zero_reduces_to_qp_bound(self):
        rng = np.random.default_rng(5)
        n = 4
        Q = gen_random_psd(n, seed=31, diag_dominance=0.5)
        a = rng.standard_normal(n)
        inst = MiqoInstance(Q, a, np.zeros(n), SupportFamily.cardinality_at_most(2),
                            offset=1.5)
        res = perspective_relaxation_bound(inst, 0.0)
        expected = float(-0.5 * a @ np.linalg.solve(Q, a) + 1.5)
        assert res.objective == pytest.approx(expected, abs=1e-8)
        assert res.certified <= expected + 1e-8

    def test_full_cardinality_diagonal_is_exact(self):
        q = np.array([2.0, 3.0, 5.0])
        a = np.array([-1.0, 2.0, 0.5])
        inst = MiqoInstance(np.diag(q), a, np.zeros(3), SupportFamily.hypercube())
        delta = perspective_delta(np.diag(q))
        res = perspective_relaxation_bound(inst, delta)
        opt = brute_force_solve(inst).value
        assert res.certified == pytest.approx(opt, abs=1e-6)

    def test_valid_lower_bound_and_monotone_in_delta(self):
        rng = np.random.default_rng(9)
        for trial in range(6):
            n = int(rng.integers(2, 6))
            Q = gen_random_psd(n, seed=400 + trial, diag_dominance=0.8)
            inst = MiqoInstance(Q, rng.standard_normal(n), np.zeros(n),
                                SupportFamily.cardinality_at_most(max(1, n // 2)))
            opt = brute_force_solve(inst).value
            lam_min = perspective_delta(Q)
            bounds = []
            for frac in np.linspace(0.0, 1.0, 5):
                res = perspective_relaxation_bound(inst, frac * lam_min)
                assert res.certified <= opt + 1e-6 * (1 + abs(opt))
                bounds.append(res.certified)
            assert all(b2 >= b1 - 1e-5 * (1 + abs(b1))
                       for b1, b2 in zip(bounds, bounds[1:]))

    def test_a_zero(self):
        inst = MiqoInstance(np.eye(3), np.zeros(3), np.array([0.2, 0.1, 0.3]),
                            SupportFamily.cardinality_at_most(2))
        res = perspective_relaxation_bound(inst, 1.0)
        assert res.certified == pytest.approx(0.0, abs=1e-7)

    def test_invalid_delta(self):
        inst = MiqoInstance(np.eye(2), np.zeros(2), np.zeros(2),
                            SupportFamily.hypercube())
        with pytest.raises(InvalidDelta):
            perspective_relaxation_bound(inst, 2.0)


class TestNaturalBound:
    def test_slack_cap_recovers_unconstrained_minimum(self):
        rng = np.random.default_rng(2)
        n = 4
        Q = gen_random_psd(n, seed=8, diag_dominance=1.0)
        a = rng.standard_normal(n)
        inst = MiqoInstance(Q, a, np.zeros(n), SupportFamily.hypercube(), offset=0.7)
        M = natural_bound_heuristic(inst)
        res = natural_relaxation_bound(inst, M)
        expected = float(-0.5 * a @ np.linalg.solve(Q, a) + 0.7)
        assert res.certified == pytest.approx(expected, abs=1e-6)

    def test_zero_data(self):
        inst = MiqoInstance(np.eye(2), np.zeros(2), np.zeros(2),
                            SupportFamily.hypercube(), offset=0.25)
        res = natural_relaxation_bound(inst, np.ones(2))
        assert res.certified == pytest.approx(0.25, abs=1e-9)

    def test_zero_cap(self):
        inst = MiqoInstance(np.eye(2), np.array([-1.0, 1.0]), np.zeros(2),
                            SupportFamily.cardinality_at_most(0), offset=0.5)
        res = natural_relaxation_bound(inst, np.ones(2))
        assert res.certified == pytest.approx(0.5, abs=1e-9)

    def test_negative_b_rejected(self):
        inst = MiqoInstance(np.eye(2), np.zeros(2), np.array([-0.1, 0.0]),
                            SupportFamily.hypercube())
        with pytest.raises(UnsupportedSign):
            natural_relaxation_bound(inst, np.ones(2))


class TestGapReport:
    def test_formula(self):
        rep = gap_report(-0.5, -1.0, "relaxation")
        assert rep.gap_percent == pytest.approx(100.0, abs=1e-12)
        assert not rep.absolute_fallback

    def test_zero_gap(self):
        assert gap_report(2.0, 2.0, "x").gap_percent == 0.0

    def test_zero_opt_fallback(self):
        rep = gap_report(0.0, -3.0, "x")
        assert rep.absolute_fallback
        assert rep.gap_percent == pytest.approx(3.0)


class TestMultiStartAgreement:
    def test_perspective_restarts_agree(self):
        # convex objective: different starting points land on the same value
        rng = np.random.default_rng(41)
        n = 5
        Q = gen_random_psd(n, seed=77, diag_dominance=0.7)
        inst = MiqoInstance(Q, rng.standard_normal(n), np.zeros(n),
                            SupportFamily.cardinality_at_most(2))
        lam = perspective_delta(Q)
        base = perspective_relaxation_bound(inst, lam)
        from hullkit.solver.projgrad import _cardinality_cap, capped_simplex_project
        import hullkit.solver.projgrad as pg

        values = [base.objective]
        for s in range(5):
            start = capped_simplex_project(rng.random(n), 2.0)
            # restart by monkeypatching the initial point through projection
            orig = pg.capped_simplex_project
            first = {"done": False}

            def patched(v, r, _start=start, _orig=orig, _first=first):
                if not _first["done"]:
                    _first["done"] = True
                    return _start.copy()
                return _orig(v, r)

            pg.capped_simplex_project = patched
            try:
                res = perspective_relaxation_bound(inst, lam)
            finally:
                pg.capped_simplex_project = orig
            values.append(res.objective)
        spread = max(values) - min(values)
        assert spread <= 1e-5 * (1 + abs(values[0]))
