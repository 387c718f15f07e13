import numpy as np
from django.test import SimpleTestCase

from core.utils.errors import ArgumentError
from sampling.ccs import ccs_sample, observation_rates, overlap, sample_unique_indices
from sampling.masks import CcsObservation, IndexSet, Mask


def panel_observation(shape, rows, cols, omega_r_pairs, omega_c_pairs, fill=1.0):
    """Observación construida a mano con valores constantes."""
    omega_r = Mask.from_pairs(omega_r_pairs, shape)
    omega_c = Mask.from_pairs(omega_c_pairs, shape)
    return CcsObservation(
        shape=shape,
        row_idx=IndexSet.from_iterable(rows, shape[0]),
        col_idx=IndexSet.from_iterable(cols, shape[1]),
        omega_r=omega_r,
        omega_c=omega_c,
        values_r=np.full(len(omega_r), fill),
        values_c=np.full(len(omega_c), fill),
    )


class IndexSetAndMaskTests(SimpleTestCase):

    def test_index_set_rejects_unsorted(self):
        with self.assertRaises(ArgumentError):
            IndexSet(np.array([2, 1]), 5)

    def test_index_set_rejects_out_of_universe(self):
        with self.assertRaises(ArgumentError):
            IndexSet(np.array([0, 5]), 5)

    def test_position_of(self):
        s = IndexSet.from_iterable([7, 2, 4], 10)
        np.testing.assert_array_equal(s.position_of([4, 7]), [1, 2])
        self.assertIn(2, s)
        self.assertNotIn(3, s)
        with self.assertRaises(ArgumentError):
            s.position_of([3])

    def test_mask_rejects_duplicates_and_bounds(self):
        with self.assertRaises(ArgumentError):
            Mask.from_pairs([(0, 0), (0, 0)], (2, 2))
        with self.assertRaises(ArgumentError):
            Mask.from_pairs([(2, 0)], (2, 2))

    def test_mask_algebra(self):
        a = Mask.from_pairs([(0, 0), (1, 1), (0, 2)], (2, 3))
        b = Mask.from_pairs([(1, 1), (1, 2)], (2, 3))
        self.assertEqual(a.intersection(b).to_pairs(), [(1, 1)])
        self.assertEqual(a.union(b).to_pairs(), [(0, 0), (0, 2), (1, 1), (1, 2)])
        self.assertEqual(a.difference(b).to_pairs(), [(0, 0), (0, 2)])
        np.testing.assert_array_equal(a.contains([0, 1], [2, 2]), [True, False])

    def test_observation_rejects_row_outside_I(self):
        """Entrada de Ω_R fuera de las filas I → error de validación"""
        with self.assertRaises(ArgumentError):
            panel_observation((3, 3), [0], [0], [(1, 1)], [])

    def test_observation_rejects_disagreeing_overlap(self):
        shape = (2, 2)
        with self.assertRaises(ArgumentError):
            CcsObservation(
                shape=shape,
                row_idx=IndexSet.from_iterable([0], 2),
                col_idx=IndexSet.from_iterable([0], 2),
                omega_r=Mask.from_pairs([(0, 0)], shape),
                omega_c=Mask.from_pairs([(0, 0)], shape),
                values_r=[1.0],
                values_c=[2.0],
            )


class SampleUniqueIndicesTests(SimpleTestCase):

    def test_exhaustive(self):
        s = sample_unique_indices(5, 5, np.random.default_rng(0))
        self.assertEqual(s.tolist(), [0, 1, 2, 3, 4])

    def test_reproducible_with_seed(self):
        a = sample_unique_indices(100, 30, np.random.default_rng(42))
        b = sample_unique_indices(100, 30, np.random.default_rng(42))
        self.assertEqual(len(a), 30)
        self.assertEqual(a, b)

    def test_singleton(self):
        s = sample_unique_indices(10, 1, np.random.default_rng(1))
        self.assertEqual(len(s), 1)
        self.assertTrue(0 <= s.tolist()[0] < 10)

    def test_target_above_universe(self):
        with self.assertRaises(ArgumentError):
            sample_unique_indices(3, 4, np.random.default_rng(0))


class CcsSampleTests(SimpleTestCase):

    def setUp(self):
        self.rng = np.random.default_rng(2024)
        self.y = self.rng.standard_normal((100, 100))

    def test_full_observation(self):
        """Todo muestreado: |Ω_R ∪ Ω_C| = 100 y 𝒫_Ω es la identidad"""
        y = self.y[:10, :10]
        obs = ccs_sample(y, 1.0, 1.0, 1.0, 1.0, np.random.default_rng(0))
        self.assertEqual(len(obs.union_mask()), 100)
        values = obs.values_map()
        for (i, j), v in values.items():
            self.assertEqual(v, y[i, j])

    def test_panel_sizes(self):
        obs = ccs_sample(self.y, 0.3, 0.3, 0.25, 0.25, np.random.default_rng(5))
        self.assertEqual(len(obs.row_idx), 30)
        self.assertEqual(len(obs.col_idx), 30)
        self.assertEqual(len(obs.omega_r), 750)
        self.assertEqual(len(obs.omega_c), 750)

    def test_deterministic(self):
        a = ccs_sample(self.y, 0.3, 0.2, 0.25, 0.5, np.random.default_rng(9))
        b = ccs_sample(self.y, 0.3, 0.2, 0.25, 0.5, np.random.default_rng(9))
        self.assertEqual(a, b)

    def test_rates_out_of_range(self):
        with self.assertRaises(ArgumentError):
            ccs_sample(self.y, 0.0, 0.3, 0.25, 0.25, self.rng)
        with self.assertRaises(ArgumentError):
            ccs_sample(self.y, 0.3, 0.3, 1.5, 0.25, self.rng)

    def test_uniform_and_cur_extremes(self):
        """row_frac=col_frac=1 es muestreo uniforme; p=1 es muestreo CUR"""
        uniform = ccs_sample(self.y, 1.0, 1.0, 0.1, 0.1, np.random.default_rng(1))
        self.assertEqual(len(uniform.row_idx), 100)
        cur = ccs_sample(self.y, 0.1, 0.1, 1.0, 1.0, np.random.default_rng(1))
        self.assertEqual(len(cur.omega_r), 10 * 100)
        rows = cur.row_panel()
        self.assertTrue(rows.own.all())

    def test_panels_hold_observed_values(self):
        obs = ccs_sample(self.y, 0.3, 0.3, 0.25, 0.25, np.random.default_rng(3))
        rows, cols = obs.row_panel(), obs.col_panel()
        I, J = obs.row_idx.values, obs.col_idx.values
        np.testing.assert_array_equal(rows.values[rows.observed], self.y[I][rows.observed])
        np.testing.assert_array_equal(cols.values[cols.observed], self.y[:, J][cols.observed])
        self.assertTrue((rows.values[~rows.observed] == 0).all())
        # las dos vistas del bloque I×J coinciden
        np.testing.assert_array_equal(rows.observed[:, J], cols.observed[I, :])
        np.testing.assert_array_equal(rows.values[:, J], cols.values[I, :])


class RatesAndOverlapTests(SimpleTestCase):

    def test_full_rates(self):
        obs = ccs_sample(np.ones((6, 5)), 1.0, 1.0, 1.0, 1.0, np.random.default_rng(0))
        self.assertEqual(observation_rates(obs), (1.0, 1.0))

    def test_row_rate_ratio(self):
        shape = (100, 100)
        rows = list(range(30))
        pairs = [(i, j) for i in rows for j in range(25)]
        obs = panel_observation(shape, rows, [0], pairs, [])
        self.assertEqual(observation_rates(obs)[0], 0.25)

    def test_col_rate_ratio(self):
        shape = (200, 100)
        cols = list(range(40))
        pairs = [(i, j) for i in range(100) for j in cols]
        obs = panel_observation(shape, [0], cols, [], pairs)
        self.assertEqual(observation_rates(obs)[1], 0.5)

    def test_single_overlap(self):
        obs = panel_observation((3, 6), [0], [5], [(0, 5), (0, 1)], [(0, 5), (2, 5)])
        self.assertEqual(overlap(obs).to_pairs(), [(0, 5)])

    def test_disjoint(self):
        obs = panel_observation((3, 6), [0], [5], [(0, 1)], [(2, 5)])
        self.assertEqual(len(overlap(obs)), 0)

    def test_full_panels_overlap_is_block(self):
        y = np.arange(48.0).reshape(6, 8)
        obs = ccs_sample(y, 0.5, 0.5, 1.0, 1.0, np.random.default_rng(4))
        block = {(i, j) for i in obs.row_idx for j in obs.col_idx}
        self.assertEqual(set(overlap(obs).to_pairs()), block)

    def test_properties_on_random_samples(self):
        """overlap ⊆ I×J y tasas en (0,1]"""
        rng = np.random.default_rng(77)
        for _ in range(20):
            n1, n2 = (int(v) for v in rng.integers(5, 40, size=2))
            fr = rng.uniform(0.05, 1.0, size=4)
            obs = ccs_sample(rng.standard_normal((n1, n2)), *fr, rng)
            ov = overlap(obs)
            self.assertTrue(np.all(obs.row_idx.contains(ov.rows)))
            self.assertTrue(np.all(obs.col_idx.contains(ov.cols)))
            for p in observation_rates(obs):
                self.assertTrue(0.0 < p <= 1.0)
