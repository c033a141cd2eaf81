import numpy as np
import pytest

from hullkit.errors import DimensionMismatch, NotPositiveDefinite, SingularSubmatrix
from hullkit.linalg import (
    cholesky,
    column_space_basis,
    eig_sym,
    padded_submatrix_inverse,
    pseudoinverse,
    schur_psd_check,
    solve_cholesky,
    subspace_intersection,
    symmetrize,
)

Q22 = np.array([[2.0, -1.0], [-1.0, 3.0]])


def random_spd(rng, n, shift=0.5):
    G = rng.standard_normal((n, n))
    return G @ G.T + shift * np.eye(n)


def random_rank(rng, m, k, r):
    if r == 0:
        return np.zeros((m, k))
    return rng.standard_normal((m, r)) @ rng.standard_normal((r, k))


class TestCholesky:
    def test_identity(self):
        L = cholesky(np.eye(2))
        assert np.allclose(L, np.eye(2), atol=1e-14)

    def test_reproduces_input(self):
        L = cholesky(Q22)
        assert np.abs(L @ L.T - Q22).max() <= 1e-12

    def test_negative_pivot_rejected(self):
        with pytest.raises(NotPositiveDefinite):
            cholesky(np.array([[-1.0]]))

    def test_solve(self):
        rng = np.random.default_rng(0)
        A = random_spd(rng, 6)
        b = rng.standard_normal(6)
        x = solve_cholesky(cholesky(A), b)
        assert np.abs(A @ x - b).max() <= 1e-9


class TestEigSym:
    def test_diagonal(self):
        vals, vecs = eig_sym(np.diag([1.0, 4.0]))
        assert np.allclose(vals, [1.0, 4.0], atol=1e-12)
        assert np.allclose(vecs.T @ vecs, np.eye(2), atol=1e-12)

    def test_2x2_characteristic_roots(self):
        # Roots of lambda^2 - 5 lambda + 5.
        vals, _ = eig_sym(Q22)
        expected = np.array([(5 - np.sqrt(5)) / 2, (5 + np.sqrt(5)) / 2])
        assert np.abs(vals - expected).max() <= 1e-12

    def test_rank_one_spectrum(self):
        h = np.array([1.0, 2.0])
        vals, _ = eig_sym(np.outer(h, h))
        assert np.abs(vals - np.array([0.0, 5.0])).max() <= 1e-12

    @pytest.mark.parametrize("n", [1, 3, 5, 8])
    def test_reconstruction_and_orthonormality(self, n):
        rng = np.random.default_rng(n)
        for _ in range(20):
            A = symmetrize(rng.standard_normal((n, n)), check=False)
            vals, V = eig_sym(A)
            scale = 1.0 + np.abs(A).max()
            assert np.abs(V @ np.diag(vals) @ V.T - A).max() <= 1e-9 * scale
            assert np.abs(V.T @ V - np.eye(n)).max() <= 1e-9
            assert np.all(np.diff(vals) >= -1e-12)

    def test_deterministic(self):
        rng = np.random.default_rng(7)
        A = symmetrize(rng.standard_normal((6, 6)), check=False)
        v1, V1 = eig_sym(A)
        v2, V2 = eig_sym(A.copy())
        assert np.array_equal(v1, v2)
        assert np.array_equal(V1, V2)


class TestPseudoinverse:
    def test_zero_matrix(self):
        assert np.array_equal(pseudoinverse(np.zeros((3, 2))), np.zeros((2, 3)))

    def test_invertible(self):
        expected = np.array([[3.0, 1.0], [1.0, 2.0]]) / 5.0
        assert np.abs(pseudoinverse(Q22) - expected).max() <= 1e-12

    def test_column_vector(self):
        # For a nonzero column h the pseudoinverse is h^T / (h^T h).
        got = pseudoinverse(np.array([1.0, 2.0]))
        assert got.shape == (1, 2)
        assert np.abs(got - np.array([[0.2, 0.4]])).max() <= 1e-14

    def test_penrose_identities_random(self):
        rng = np.random.default_rng(11)
        checked = 0
        while checked < 200:
            m = int(rng.integers(1, 9))
            k = int(rng.integers(1, 9))
            r = int(rng.integers(0, min(m, k) + 1))
            A = random_rank(rng, m, k, r)
            P = pseudoinverse(A)
            tol = 1e-8 * (1.0 + (np.abs(A).max() if A.size else 0.0))
            assert np.abs(A @ P @ A - A).max() <= tol
            assert np.abs(P @ A @ P - P).max() <= tol
            assert np.abs((A @ P) - (A @ P).T).max() <= tol
            assert np.abs((P @ A) - (P @ A).T).max() <= tol
            assert np.abs(pseudoinverse(P) - A).max() <= 1e-8 * (1.0 + np.abs(A).max())
            checked += 1


class TestPaddedSubmatrixInverse:
    def test_single_index(self):
        d1, b, d2 = 2.0, -1.0, 3.0
        Q = np.array([[d1, b], [b, d2]])
        W = padded_submatrix_inverse(Q, [0])
        assert np.abs(W - np.array([[1.0 / d1, 0.0], [0.0, 0.0]])).max() <= 1e-14

    def test_empty_support(self):
        assert np.array_equal(padded_submatrix_inverse(Q22, []), np.zeros((2, 2)))

    def test_full_support(self):
        expected = np.array([[3.0, 1.0], [1.0, 2.0]]) / 5.0
        assert np.abs(padded_submatrix_inverse(Q22, [0, 1]) - expected).max() <= 1e-12

    def test_restriction_inverts(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            n = int(rng.integers(1, 11))
            Q = random_spd(rng, n)
            for mask in range(1 << n):
                S = [i for i in range(n) if mask >> i & 1]
                if not S:
                    continue
                W = padded_submatrix_inverse(Q, S)
                idx = np.ix_(S, S)
                assert np.abs(W[idx] @ Q[idx] - np.eye(len(S))).max() <= 1e-10
                off = np.ones((n, n), dtype=bool)
                off[idx] = False
                assert np.all(W[off] == 0.0)
            if n >= 6:
                break  # full-mask sweep only for the small sizes

    def test_singular_submatrix(self):
        Q = np.array([[1.0, 1.0], [1.0, 1.0]])
        with pytest.raises(SingularSubmatrix):
            padded_submatrix_inverse(Q, [0, 1])


class TestSchurCheck:
    def test_block_identity(self):
        assert schur_psd_check(np.eye(2), np.zeros((2, 2)), np.eye(2))

    def test_range_condition_fails(self):
        assert not schur_psd_check(
            np.zeros((1, 1)), np.array([[1.0]]), np.array([[1.0]])
        )

    def test_projection_block(self):
        # Lifted factorized point: W = h h^T / 2 with h = (1, 1), u = (1, 1), t = 2.
        W = np.full((2, 2), 0.5)
        u = np.array([[1.0], [1.0]])
        assert schur_psd_check(W, u, np.array([[2.0]]))
        assert not schur_psd_check(W, u, np.array([[1.9]]))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            schur_psd_check(np.eye(2), np.zeros((3, 1)), np.eye(1))

    def test_agrees_with_direct_eigenvalue_oracle(self):
        rng = np.random.default_rng(5)
        agree = 0
        while agree < 200:
            p = int(rng.integers(1, 5))
            q = int(rng.integers(1, 5))
            if rng.random() < 0.5:
                r = int(rng.integers(0, p + q + 1))
                M = random_rank(rng, p + q, p + q, r)
                M = M @ M.T  # PSD of chosen rank
            else:
                M = symmetrize(rng.standard_normal((p + q, p + q)), check=False)
            lam = np.linalg.eigvalsh(M)
            direct = lam[0] >= -1e-9 * (1.0 + np.abs(M).max())
            if abs(lam[0]) <= 1e-7 * (1.0 + np.abs(M).max()) and lam[0] < 0:
                continue  # borderline inputs are tolerance-dependent either way
            got = schur_psd_check(M[:p, :p], M[:p, p:], M[p:, p:])
            assert got == direct
            agree += 1


class TestSubspaces:
    def test_full_basis(self):
        B = column_space_basis(np.eye(3))
        assert B.shape == (3, 3)
        assert np.abs(B.T @ B - np.eye(3)).max() <= 1e-12

    def test_single_vector(self):
        B = column_space_basis(np.array([1.0, 2.0]))
        assert B.shape == (2, 1)
        assert np.abs(B[:, 0] - np.array([1.0, 2.0]) / np.sqrt(5)).max() <= 1e-12

    def test_zero_column(self):
        assert column_space_basis(np.zeros((3, 1))).shape == (3, 0)

    def test_intersection_full(self):
        got = subspace_intersection([np.eye(2), np.eye(2)])
        assert got.shape == (2, 2)

    def test_intersection_trivial(self):
        e1 = np.array([[1.0], [0.0]])
        e2 = np.array([[0.0], [1.0]])
        assert subspace_intersection([e1, e2]).shape == (2, 0)

    def test_intersection_of_planes(self):
        U = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        V = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        got = subspace_intersection([U, V])
        assert got.shape == (3, 1)
        assert np.abs(np.abs(got[:, 0]) - np.array([0.0, 1.0, 0.0])).max() <= 1e-10

    def test_intersection_random_containment(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            n = int(rng.integers(2, 7))
            A = rng.standard_normal((n, int(rng.integers(1, n + 1))))
            B = np.hstack([A[:, :1], rng.standard_normal((n, 1))])
            got = subspace_intersection([A, B])
            # A's first column lies in both spans, so the intersection
            # contains it; verify by projecting.
            v = A[:, 0]
            proj = got @ (got.T @ v)
            assert np.abs(proj - v).max() <= 1e-8 * (1 + np.abs(v).max())
