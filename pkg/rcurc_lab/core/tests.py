from unittest.mock import patch

import numpy as np
from django.test import SimpleTestCase

from core.linalg import (
    PINV_RTOL,
    SvdR,
    cur_product,
    frob_inner,
    numerical_rank,
    pinv_rank_r,
    rank_r_project,
    submatrix,
    truncated_svd,
)
from core.utils.errors import ArgumentError, NumericError
from core.utils.matrices import as_dense


def brute_force_projection(m, r):
    u, s, vt = np.linalg.svd(m)
    s[r:] = 0.0
    return (u[:, :len(s)] * s) @ vt[:len(s)]


class DenseMatrixTests(SimpleTestCase):

    def test_as_dense_rejects_nan(self):
        """Los valores no finitos se rechazan al construir"""
        with self.assertRaises(ArgumentError):
            as_dense([[1.0, np.nan]])

    def test_as_dense_rejects_vectors(self):
        with self.assertRaises(ArgumentError):
            as_dense([1.0, 2.0])

    def test_as_dense_is_row_major_float64(self):
        m = as_dense(np.asfortranarray(np.ones((3, 2), dtype=np.int32)))
        self.assertEqual(m.dtype, np.float64)
        self.assertTrue(m.flags.c_contiguous)


class TruncatedSvdTests(SimpleTestCase):

    def setUp(self):
        self.rng = np.random.default_rng(7)

    def test_diagonal_top_two(self):
        """diag(3,2,1), r=2 → sigma=(3,2), reconstrucción diag(3,2,0)"""
        f = truncated_svd(np.diag([3.0, 2.0, 1.0]), 2)
        np.testing.assert_allclose(f.sigma, [3.0, 2.0])
        np.testing.assert_allclose(f.reconstruct(), np.diag([3.0, 2.0, 0.0]), atol=1e-14)

    def test_identity_full_rank(self):
        f = truncated_svd(np.eye(4), 4)
        np.testing.assert_allclose(f.reconstruct(), np.eye(4), atol=1e-14)

    def test_exact_low_rank_reconstruction(self):
        m = self.rng.standard_normal((20, 5)) @ self.rng.standard_normal((5, 20))
        f = truncated_svd(m, 5)
        rel = np.linalg.norm(f.reconstruct() - m) / np.linalg.norm(m)
        self.assertLessEqual(rel, 1e-10)

    def test_rank_out_of_range(self):
        with self.assertRaises(ArgumentError):
            truncated_svd(np.eye(3), 0)
        with self.assertRaises(ArgumentError):
            truncated_svd(np.eye(3), 4)

    def test_svd_failure_is_numeric_error(self):
        with patch("core.linalg.np.linalg.svd", side_effect=np.linalg.LinAlgError("boom")):
            with self.assertRaises(NumericError):
                truncated_svd(np.eye(3), 1)

    def test_orthonormal_frames(self):
        """uᵀu = I_r, vᵀv = I_r y sigma no creciente, hasta 200×200"""
        for n1, n2, r in [(10, 7, 3), (60, 80, 20), (200, 200, 50)]:
            f = truncated_svd(self.rng.standard_normal((n1, n2)), r)
            np.testing.assert_allclose(f.u.T @ f.u, np.eye(r), atol=1e-10)
            np.testing.assert_allclose(f.v.T @ f.v, np.eye(r), atol=1e-10)
            self.assertTrue(np.all(np.diff(f.sigma) <= 0))
            self.assertTrue(np.all(f.sigma >= 0))


class RankProjectTests(SimpleTestCase):

    def setUp(self):
        self.rng = np.random.default_rng(11)

    def test_diagonal_rank_one(self):
        np.testing.assert_allclose(rank_r_project(np.diag([3.0, 2.0, 1.0]), 1), np.diag([3.0, 0.0, 0.0]), atol=1e-14)

    def test_zero_fixed_point(self):
        np.testing.assert_array_equal(rank_r_project(np.zeros((4, 3)), 2), np.zeros((4, 3)))

    def test_rank_two_unchanged(self):
        a = np.outer([1.0, 2.0, 0.5, -1.0], [1.0, 0.0, 3.0])
        b = np.outer([0.0, 1.0, -2.0, 4.0], [2.0, 1.0, 1.0])
        m = a + b
        np.testing.assert_allclose(rank_r_project(m, 2), m, atol=1e-10)

    def test_matches_brute_force_oracle(self):
        """100 matrices 20×20 aleatorias contra SVD completa truncada"""
        for _ in range(100):
            m = self.rng.standard_normal((20, 20))
            r = int(self.rng.integers(1, 21))
            err = np.linalg.norm(rank_r_project(m, r) - brute_force_projection(m, r))
            self.assertLessEqual(err, 1e-10)

    def test_best_approximation_spot_check(self):
        m = self.rng.standard_normal((8, 6))
        r = 2
        best = np.linalg.norm(m - rank_r_project(m, r))
        for _ in range(100):
            b = self.rng.standard_normal((8, r)) @ self.rng.standard_normal((r, 6))
            self.assertLessEqual(best, np.linalg.norm(m - b))


class PseudoinverseTests(SimpleTestCase):

    def setUp(self):
        self.rng = np.random.default_rng(3)

    def full(self, m):
        return truncated_svd(m, min(m.shape))

    def test_scalar(self):
        np.testing.assert_allclose(pinv_rank_r(self.full(np.array([[2.0]]))), [[0.5]])

    def test_zero_singular_value(self):
        np.testing.assert_allclose(pinv_rank_r(self.full(np.diag([4.0, 0.0]))), np.diag([0.25, 0.0]))

    def test_orthogonal_is_transpose(self):
        q, _ = np.linalg.qr(self.rng.standard_normal((5, 5)))
        np.testing.assert_allclose(pinv_rank_r(self.full(q)), q.T, atol=1e-12)

    def test_all_zero_core(self):
        f = SvdR(u=np.eye(3)[:, :2], sigma=np.zeros(2), v=np.eye(2))
        np.testing.assert_array_equal(pinv_rank_r(f), np.zeros((2, 3)))

    def test_moore_penrose_identities(self):
        """Las cuatro identidades de Moore–Penrose en 10×8 con rango deficiente"""
        for _ in range(20):
            m = self.rng.standard_normal((10, 3)) @ self.rng.standard_normal((3, 8))
            p = pinv_rank_r(self.full(m))
            scale = np.linalg.norm(m)
            self.assertLessEqual(np.linalg.norm(m @ p @ m - m) / scale, 1e-8)
            self.assertLessEqual(np.linalg.norm(p @ m @ p - p) / np.linalg.norm(p), 1e-8)
            np.testing.assert_allclose(m @ p, (m @ p).T, atol=1e-8)
            np.testing.assert_allclose(p @ m, (p @ m).T, atol=1e-8)

    def test_tolerance_constant(self):
        self.assertEqual(PINV_RTOL, 1e-12)


class SubmatrixAndInnerTests(SimpleTestCase):

    def test_row_slice(self):
        m = np.array([[8.0, 1.0, 6.0], [3.0, 5.0, 7.0], [4.0, 9.0, 2.0]])
        np.testing.assert_array_equal(submatrix(m, [0], None), [[8.0, 1.0, 6.0]])

    def test_identity_corners(self):
        np.testing.assert_array_equal(submatrix(np.eye(3), [0, 2], [0, 2]), np.eye(2))

    def test_single_entry(self):
        np.testing.assert_array_equal(submatrix([[1.0, 2.0], [3.0, 4.0]], [1], [1]), [[4.0]])

    def test_out_of_range(self):
        with self.assertRaises(ArgumentError):
            submatrix(np.eye(2), [2], None)
        with self.assertRaises(ArgumentError):
            submatrix(np.eye(2), None, [-1])

    def test_frob_inner_examples(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        self.assertEqual(frob_inner(a, a), 30.0)
        self.assertEqual(frob_inner(a, np.zeros((2, 2))), 0.0)
        self.assertEqual(frob_inner(np.eye(2), [[0.0, 1.0], [1.0, 0.0]]), 0.0)

    def test_frob_inner_mismatch(self):
        with self.assertRaises(ArgumentError):
            frob_inner(np.eye(2), np.eye(3))

    def test_cur_product_and_rank(self):
        x = np.array([[1.0, 2.0], [2.0, 4.0]])
        c, u, r = x[:, [0]], x[[0]][:, [0]], x[[0], :]
        np.testing.assert_allclose(cur_product(c, pinv_rank_r(truncated_svd(u, 1)), r), x)
        self.assertEqual(numerical_rank(np.linalg.svd(x, compute_uv=False)), 1)
