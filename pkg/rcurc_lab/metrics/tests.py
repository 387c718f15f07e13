import math

import numpy as np
from django.test import SimpleTestCase

from core.utils.errors import ArgumentError, NumericError
from metrics.measures import fit_linear_rate, psnr, recovery_error, summarize_repeats


class RecoveryErrorTests(SimpleTestCase):

    def setUp(self):
        self.x = np.random.default_rng(0).standard_normal((6, 5))

    def test_exact(self):
        self.assertEqual(recovery_error(self.x, self.x), 0.0)

    def test_doubled(self):
        self.assertAlmostEqual(recovery_error(2 * self.x, self.x), 1.0, places=14)

    def test_zero_estimate(self):
        self.assertAlmostEqual(recovery_error(np.zeros_like(self.x), self.x), 1.0, places=14)

    def test_zero_truth(self):
        with self.assertRaises(NumericError):
            recovery_error(self.x, np.zeros_like(self.x))

    def test_shape_mismatch(self):
        with self.assertRaises(ArgumentError):
            recovery_error(self.x, self.x.T)


class PsnrTests(SimpleTestCase):

    def test_identical_is_infinite(self):
        a = np.full((3, 3), 7.0)
        self.assertEqual(psnr(a, a), math.inf)

    def test_twenty_db(self):
        """peak=1 y MSE=0.01 → 20 dB"""
        ref = np.zeros((10, 10))
        est = np.full((10, 10), 0.1)
        self.assertAlmostEqual(psnr(ref, est, peak=1.0), 20.0, places=10)

    def test_eight_bit_thirty_db(self):
        """peak=255 y MSE=65.025 → 30 dB"""
        ref = np.full((4, 4), 100.0)
        est = ref + math.sqrt(65.025)
        self.assertAlmostEqual(psnr(ref, est, peak=255), 30.0, places=10)

    def test_auto_peak(self):
        ref = np.array([[0.0, -4.0], [2.0, 1.0]])
        est = ref + 0.4
        self.assertAlmostEqual(psnr(ref, est), psnr(ref, est, peak=4.0), places=12)

    def test_symmetric_for_explicit_peak(self):
        rng = np.random.default_rng(3)
        a, b = rng.standard_normal((2, 5, 5))
        self.assertAlmostEqual(psnr(a, b, 10.0), psnr(b, a, 10.0), places=12)

    def test_decreases_with_error(self):
        ref = np.zeros((5, 5))
        values = [psnr(ref, np.full((5, 5), d), 1.0) for d in (0.01, 0.1, 0.5)]
        self.assertTrue(values[0] > values[1] > values[2])


class FitLinearRateTests(SimpleTestCase):

    def test_geometric_trace(self):
        trace = [(k, 0.5 ** k) for k in range(1, 21)]
        fit = fit_linear_rate(trace)
        self.assertAlmostEqual(fit.slope, math.log(0.5), places=12)
        self.assertAlmostEqual(fit.r2, 1.0, delta=1e-12)
        self.assertEqual(fit.iters_used, 20)
        self.assertAlmostEqual(fit.rate, 0.5, places=12)

    def test_constant_trace(self):
        fit = fit_linear_rate([(k, 0.3) for k in range(1, 6)])
        self.assertEqual(fit.slope, 0.0)
        self.assertEqual(fit.r2, 0.0)

    def test_stops_at_zero(self):
        trace = [(1, 0.1), (2, 0.01), (3, 0.001), (4, 0.0), (5, 1e-9)]
        fit = fit_linear_rate(trace)
        self.assertEqual(fit.iters_used, 3)
        self.assertAlmostEqual(fit.slope, math.log(0.1), places=10)

    def test_too_short(self):
        with self.assertRaises(ArgumentError):
            fit_linear_rate([(1, 0.0), (2, 0.1)])
        with self.assertRaises(ArgumentError):
            fit_linear_rate([(1, 0.5)])


class SummarizeRepeatsTests(SimpleTestCase):

    def test_aggregates_numeric_fields(self):
        summaries = [
            {"final_e_k": 1e-5, "iterations": 10, "termination": "converged", "seed": 7},
            {"final_e_k": 3e-5, "iterations": 14, "termination": "converged", "seed": 8},
            {"final_e_k": 2e-3, "iterations": 500, "termination": "max_iters", "seed": 9, "extra": 1.0},
        ]
        out = summarize_repeats(summaries)
        self.assertEqual(out["repeats"], 3)
        self.assertEqual(out["terminations"], {"converged": 2, "max_iters": 1})
        self.assertNotIn("extra", out["fields"])
        self.assertNotIn("termination", out["fields"])
        it = out["fields"]["iterations"]
        self.assertAlmostEqual(it["mean"], 524 / 3)
        self.assertEqual(it["min"], 10.0)
        self.assertEqual(it["max"], 500.0)
        self.assertAlmostEqual(it["std"], float(np.std([10, 14, 500])))

    def test_empty(self):
        with self.assertRaises(ArgumentError):
            summarize_repeats([])
