import math

import numpy as np
from django.test import SimpleTestCase, tag

from core.utils.errors import ArgumentError
from problems.checks import cur_exact_check, incoherence_mu, rank_of, sparsity_alpha
from problems.generators import gen_low_rank, gen_sparse_outliers, make_synthetic_problem
from problems.video import make_video_surrogate
from sampling.ccs import sample_unique_indices
from sampling.masks import IndexSet


class LowRankGeneratorTests(SimpleTestCase):

    def test_rank_three(self):
        """n1=n2=50, r=3 → σ_4/σ_1 ≤ 1e-10"""
        x = gen_low_rank(50, 50, 3, np.random.default_rng(0))
        s = np.linalg.svd(x, compute_uv=False)
        self.assertLessEqual(s[3] / s[0], 1e-10)
        self.assertEqual(rank_of(x), 3)

    def test_full_rank(self):
        x = gen_low_rank(6, 8, 6, np.random.default_rng(1))
        self.assertEqual(rank_of(x), 6)

    def test_deterministic(self):
        a = gen_low_rank(10, 12, 2, np.random.default_rng(5))
        b = gen_low_rank(10, 12, 2, np.random.default_rng(5))
        np.testing.assert_array_equal(a, b)

    def test_rank_out_of_range(self):
        with self.assertRaises(ArgumentError):
            gen_low_rank(4, 5, 5, np.random.default_rng(0))


class SparseOutlierTests(SimpleTestCase):

    def setUp(self):
        self.rng = np.random.default_rng(12)
        self.x = gen_low_rank(100, 100, 3, self.rng)

    def test_alpha_zero(self):
        s = gen_sparse_outliers(self.x, 0.0, 10.0, self.rng)
        self.assertFalse(s.any())

    def test_row_and_column_caps(self):
        """100×100 con α=0.2 → ≤ 20 no nulos por fila y por columna"""
        s = gen_sparse_outliers(self.x, 0.2, 10.0, self.rng)
        self.assertLessEqual((s != 0).sum(axis=1).max(), 20)
        self.assertLessEqual((s != 0).sum(axis=0).max(), 20)
        self.assertLessEqual(sparsity_alpha(s), 0.2)

    def test_amplitude_range(self):
        x = np.ones((40, 40))
        s = gen_sparse_outliers(x, 0.1, 10.0, self.rng)
        nz = s[s != 0]
        self.assertTrue(nz.size > 0)
        self.assertTrue(np.all(np.abs(nz) <= 10.0))

    def test_exact_row_counts_under_column_cap(self):
        """cada fila lleva exactamente ⌊α·n2⌋ outliers y ninguna columna pasa de ⌈α·n1⌉"""
        cases = [
            # n1, n2, α, ⌊α·n2⌋, ⌈α·n1⌉
            (100, 100, 0.2, 20, 20),
            (30, 70, 0.15, 10, 5),
            (40, 10, 0.3, 3, 12),
            (70, 30, 0.15, 4, 11),
            (30, 90, 0.05, 4, 2),
        ]
        for n1, n2, alpha, per_row, cap in cases:
            for seed in (1, 2):
                with self.subTest(shape=(n1, n2), alpha=alpha, seed=seed):
                    s = gen_sparse_outliers(np.ones((n1, n2)), alpha, 1.0, np.random.default_rng(seed))
                    nz = s != 0
                    self.assertTrue(np.all(nz.sum(axis=1) == per_row))
                    self.assertLessEqual(nz.sum(axis=0).max(), cap)

    def test_floor_column_cap_when_it_fits(self):
        """70×30, α=0.15: 30·⌊10.5⌋ ≥ 70·4, así que basta el tope ⌊α·n1⌋ y se cumple α exacto"""
        s = gen_sparse_outliers(np.ones((70, 30)), 0.15, 1.0, self.rng)
        self.assertLessEqual((s != 0).sum(axis=0).max(), 10)
        self.assertLessEqual(sparsity_alpha(s), 0.15)

    def test_square_shapes_keep_alpha(self):
        for alpha in (0.05, 0.1, 0.3, 0.45):
            s = gen_sparse_outliers(gen_low_rank(60, 60, 2, self.rng), alpha, 5.0, self.rng)
            self.assertLessEqual(sparsity_alpha(s), alpha)

    def test_invalid_parameters(self):
        with self.assertRaises(ArgumentError):
            gen_sparse_outliers(self.x, 0.5, 1.0, self.rng)
        with self.assertRaises(ArgumentError):
            gen_sparse_outliers(self.x, 0.1, 0.0, self.rng)

    def test_synthetic_problem(self):
        p = make_synthetic_problem(60, 50, 4, 0.1, 10.0, np.random.default_rng(3))
        np.testing.assert_array_equal(p.y, p.x_true + p.s_true)
        self.assertEqual(rank_of(p.x_true), 4)
        self.assertLessEqual(sparsity_alpha(p.s_true), 0.1)


class AssumptionCheckerTests(SimpleTestCase):

    def test_mu_all_ones(self):
        self.assertAlmostEqual(incoherence_mu(np.ones((4, 4)), 1), 1.0, places=12)

    def test_mu_spike(self):
        x = np.zeros((4, 4))
        x[0, 0] = 1.0
        self.assertAlmostEqual(incoherence_mu(x, 1), 4.0, places=12)

    def test_mu_identity(self):
        self.assertAlmostEqual(incoherence_mu(np.eye(5), 5), 1.0, places=12)

    def test_mu_lower_bound(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            x = gen_low_rank(30, 20, 3, rng)
            self.assertGreaterEqual(incoherence_mu(x, 3), 1.0 - 1e-12)

    def test_alpha_examples(self):
        self.assertEqual(sparsity_alpha(np.zeros((3, 3))), 0.0)
        s = np.zeros((3, 3))
        s[0, 0] = s[1, 1] = 1.0
        self.assertAlmostEqual(sparsity_alpha(s), 1 / 3)
        self.assertEqual(sparsity_alpha(np.ones((2, 5))), 1.0)


class CurExactTests(SimpleTestCase):

    def test_hand_rank_one(self):
        x = np.array([[1.0, 2.0], [2.0, 4.0]])
        check = cur_exact_check(x, IndexSet.from_iterable([0], 2), IndexSet.from_iterable([0], 2))
        self.assertTrue(check.ok)
        self.assertLessEqual(check.rel_err, 1e-15)

    def test_full_index_sets(self):
        x = gen_low_rank(8, 6, 6, np.random.default_rng(2))
        self.assertTrue(cur_exact_check(x, None, None).ok)

    def test_core_too_small(self):
        x = gen_low_rank(6, 6, 2, np.random.default_rng(4))
        check = cur_exact_check(x, [0], [0])
        self.assertFalse(check.ok)

    def test_zero_matrix_absolute_error(self):
        check = cur_exact_check(np.zeros((3, 3)), [0], [1])
        self.assertTrue(check.ok)
        self.assertEqual(check.rel_err, 0.0)

    def test_exact_cur_on_seeded_rank_three(self):
        """100 matrices 50×50 de rango 3 con |I|=|J|=10 y rank(U)=3 → rel_err ≤ 1e-10"""
        rng = np.random.default_rng(100)
        checked = 0
        while checked < 100:
            x = gen_low_rank(50, 50, 3, rng)
            I = sample_unique_indices(50, 10, rng)
            J = sample_unique_indices(50, 10, rng)
            if rank_of(x[np.ix_(I.values, J.values)]) != 3:
                continue
            check = cur_exact_check(x, I, J)
            self.assertLessEqual(check.rel_err, 1e-10)
            self.assertTrue(check.ok)
            checked += 1

    @tag("slow")
    def test_uniform_rows_columns_reach_full_rank(self):
        """n=300, r=3, |I|=|J|=⌈4 r ln n⌉ → rank(U)=r en ≥ 98 de 100 ensayos"""
        n, r = 300, 3
        k = math.ceil(4 * r * math.log(n))
        hits = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            x = gen_low_rank(n, n, r, rng)
            I = sample_unique_indices(n, k, rng)
            J = sample_unique_indices(n, k, rng)
            hits += rank_of(x[np.ix_(I.values, J.values)]) == r
        self.assertGreaterEqual(hits, 98)


class VideoSurrogateTests(SimpleTestCase):

    def test_shape_rank_and_sparsity(self):
        p = make_video_surrogate(40, 30, 100, 0.05, np.random.default_rng(6))
        self.assertEqual(p.y.shape, (1200, 100))
        self.assertEqual(rank_of(p.x_true), 1)
        self.assertLessEqual(sparsity_alpha(p.s_true), 0.05)
        self.assertTrue(p.s_true.any())
        self.assertTrue(np.all((p.y >= 0) & (p.y <= 255)))
        np.testing.assert_allclose(p.y, p.x_true + p.s_true, atol=1e-12)

    def test_invalid_alpha(self):
        with self.assertRaises(ArgumentError):
            make_video_surrogate(4, 4, 4, 0.6, np.random.default_rng(0))
