"""Sparse symmetric storage, Cholesky solves, and eigen/IO helpers."""

import numpy as np
import pytest
import scipy.sparse

from msp import sparselin as sl


def random_spd(n, seed=0):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, n))
    return g @ g.T + n * np.eye(n)


class TestSparseSymMatrix:
    def test_from_dense_round_trip(self):
        a = random_spd(7)
        m = sl.SparseSymMatrix.from_dense(a)
        assert np.allclose(m.to_dense(), a)
        assert m.dim == 7

    def test_matvec_matches_dense(self):
        a = random_spd(9, seed=1)
        m = sl.SparseSymMatrix.from_dense(a)
        x = np.random.default_rng(2).standard_normal(9)
        assert np.allclose(m.matvec(x), a @ x)

    def test_from_triplets_order_independent(self):
        rows = [0, 2, 1, 2, 0]
        cols = [0, 0, 1, 2, 2]
        vals = [2.0, 0.5, 3.0, 4.0, 0.25]
        dense = np.zeros((3, 3))
        for r, c, v in zip(rows, cols, vals):
            dense[r, c] += v
            if r != c:
                dense[c, r] += v
        m1 = sl.SparseSymMatrix.from_triplets(3, rows, cols, vals)
        perm = [3, 1, 4, 0, 2]
        m2 = sl.SparseSymMatrix.from_triplets(
            3, [rows[i] for i in perm], [cols[i] for i in perm], [vals[i] for i in perm]
        )
        assert np.allclose(m1.to_dense(), dense)
        assert np.allclose(m2.to_dense(), dense)

    def test_duplicate_triplets_accumulate(self):
        m = sl.SparseSymMatrix.from_triplets(2, [0, 0, 1], [1, 1, 1], [1.0, 2.0, 5.0])
        assert np.allclose(m.to_dense(), [[0.0, 3.0], [3.0, 5.0]])

    def test_scaled_and_add(self):
        a = random_spd(5, seed=3)
        b = random_spd(5, seed=4)
        ma = sl.SparseSymMatrix.from_dense(a)
        mb = sl.SparseSymMatrix.from_dense(b)
        assert np.allclose(ma.scaled(2.5).to_dense(), 2.5 * a)
        assert np.allclose(ma.add(mb, 0.75).to_dense(), a + 0.75 * b)


class TestCholesky:
    @pytest.mark.parametrize("n", [1, 5, 40])
    def test_solve_round_trip(self, n):
        a = random_spd(n, seed=n)
        m = sl.SparseSymMatrix.from_dense(a)
        f = sl.cholesky(m)
        rng = np.random.default_rng(n + 1)
        x = rng.standard_normal(n)
        assert np.allclose(sl.solve_chol(f, a @ x), x, atol=1e-8)

    def test_matrix_rhs(self):
        a = random_spd(8, seed=7)
        f = sl.cholesky(sl.SparseSymMatrix.from_dense(a))
        xs = np.random.default_rng(8).standard_normal((8, 3))
        assert np.allclose(sl.solve_chol(f, a @ xs), xs, atol=1e-8)

    def test_banded_path_on_tridiagonal(self):
        n = 200
        main = np.full(n, 2.0)
        off = np.full(n - 1, -1.0)
        a = scipy.sparse.diags([off, main, off], [-1, 0, 1]).tocsr()
        m = sl.SparseSymMatrix(scipy.sparse.triu(a))
        f = sl.cholesky(m)
        rng = np.random.default_rng(0)
        x = rng.standard_normal(n)
        assert np.allclose(sl.solve_chol(f, a @ x), x, atol=1e-8)

    def test_indefinite_raises(self):
        with pytest.raises(sl.NotPositiveDefinite):
            sl.cholesky(sl.SparseSymMatrix.from_dense(np.diag([1.0, -1.0])))

    def test_semidefinite_raises(self):
        with pytest.raises(sl.NotPositiveDefinite):
            sl.cholesky(sl.SparseSymMatrix.from_dense(np.diag([1.0, 0.0, 2.0])))


class TestEigen:
    def test_sym_eig_dense(self):
        a = np.diag([3.0, -1.0, 5.0])
        w, v = sl.sym_eig_dense(a)
        assert np.allclose(w, [-1.0, 3.0, 5.0])
        assert np.allclose(v @ np.diag(w) @ v.T, a, atol=1e-12)

    def test_sym_eig_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            sl.sym_eig_dense(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_generalized_diag(self):
        a = sl.SparseSymMatrix.from_dense(np.eye(3))
        s = sl.SparseSymMatrix.from_dense(np.diag([1.0, 2.0, 4.0]))
        ev = sl.gen_sym_eig(a, s)
        assert np.allclose(sorted(ev), [0.25, 0.5, 1.0])

    def test_generalized_indefinite_mass_raises(self):
        a = sl.SparseSymMatrix.from_dense(np.eye(2))
        s = sl.SparseSymMatrix.from_dense(np.diag([1.0, -1.0]))
        with pytest.raises(sl.NotPositiveDefinite):
            sl.gen_sym_eig(a, s)


class TestMatrixMarket:
    def test_round_trip(self, tmp_path):
        a = random_spd(6, seed=11)
        m = sl.SparseSymMatrix.from_dense(a)
        path = tmp_path / "m.mtx"
        sl.write_matrix_market(m, path)
        back = sl.read_matrix_market(path)
        assert np.allclose(back.to_dense(), a, atol=1e-12)
