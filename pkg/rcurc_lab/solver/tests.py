from unittest import mock

import numpy as np
from django.test import SimpleTestCase, tag

from core.linalg import rank_r_project, truncated_svd
from core.utils.errors import ArgumentError, NumericError, SolverError
from metrics.measures import fit_linear_rate, recovery_error
from problems.generators import gen_low_rank, gen_sparse_outliers, make_synthetic_problem
from sampling.ccs import ccs_sample
from sampling.masks import CcsObservation, IndexSet, Mask
from solver.ledger import BufferLedger, dense_footprint, panel_footprint
from solver.rcurc import (
    compute_error,
    hard_threshold,
    materialize,
    rcurc_step,
    restricted_reconstruct,
    solve,
    union_sum,
    zeta_at,
)
from solver.structures import CurFactors, SolverConfig, SparseCross, Termination

# pico de memoria admitido, en juegos de paneles (|I|×n2 + n1×|J|): iterado,
# S, factores del informe anterior, paneles de Y y temporales del paso
PANEL_COPIES = 10


def sampled_problem(d, r, alpha, c, seed, row_frac=0.3, p=0.25):
    """Problema sintético d×d y su muestreo CCS con el mismo generador."""
    rng = np.random.default_rng(seed)
    problem = make_synthetic_problem(d, d, r, alpha, c, rng)
    obs = ccs_sample(problem.y, row_frac, row_frac, p, p, rng)
    return problem, obs


def scaled(obs, beta):
    return CcsObservation(
        shape=obs.shape,
        row_idx=obs.row_idx,
        col_idx=obs.col_idx,
        omega_r=obs.omega_r,
        omega_c=obs.omega_c,
        values_r=beta * obs.values_r,
        values_c=beta * obs.values_c,
    )


def rel_diff(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


class HardThresholdTests(SimpleTestCase):

    def test_keeps_equal_magnitude(self):
        """[−3, 1.5, 2, 0] con ζ=2 → [−3, 0, 2, 0]"""
        out = hard_threshold(np.array([[-3.0, 1.5, 2.0, 0.0]]), 2.0)
        np.testing.assert_array_equal(out, [[-3.0, 0.0, 2.0, 0.0]])

    def test_zero_threshold_is_identity(self):
        m = np.random.default_rng(0).standard_normal((4, 3))
        np.testing.assert_array_equal(hard_threshold(m, 0.0), m)

    def test_large_threshold_zeroes(self):
        m = np.random.default_rng(1).standard_normal((4, 3))
        self.assertFalse(hard_threshold(m, np.abs(m).max() * 1.01).any())

    def test_negative_threshold(self):
        with self.assertRaises(ArgumentError):
            hard_threshold(np.ones((2, 2)), -1.0)


class ZetaAtTests(SimpleTestCase):

    def setUp(self):
        self.cfg = SolverConfig(rank=1, zeta0=10.0, gamma=0.6)

    def test_first_step_uses_zeta0(self):
        self.assertEqual(zeta_at(self.cfg, 0), 10.0)

    def test_decay(self):
        self.assertAlmostEqual(zeta_at(self.cfg, 2), 3.6, places=12)

    def test_monotone(self):
        values = [zeta_at(self.cfg, k) for k in range(8)]
        self.assertTrue(all(a > b for a, b in zip(values[1:], values[2:])))
        self.assertLess(values[1], values[0])

    def test_unresolved_auto(self):
        with self.assertRaises(ArgumentError):
            zeta_at(SolverConfig(rank=1), 0)


class UnionSumTests(SimpleTestCase):

    def both(self, r, c, eta_r, eta_c):
        t = np.array([[True]])
        return union_sum(np.array([[r]]), np.array([[c]]), t, t, eta_r, eta_c)[0, 0]

    def test_weighted_average_on_overlap(self):
        """r=8, c=3, η_R=4, η_C=1 en ambas máscaras → 4"""
        self.assertAlmostEqual(self.both(8.0, 3.0, 4.0, 1.0), 4.0, places=14)

    def test_plain_average_for_equal_steps(self):
        self.assertAlmostEqual(self.both(2.0, 4.0, 1.5, 1.5), 3.0, places=14)

    def test_single_mask_cases(self):
        r_blk = np.array([[8.0, 8.0, 8.0]])
        c_blk = np.array([[3.0, 3.0, 3.0]])
        omega_r = Mask.from_pairs([(0, 0)], (1, 3))
        omega_c = Mask.from_pairs([(0, 1)], (1, 3))
        out = union_sum(r_blk, c_blk, omega_r, omega_c, 4.0, 1.0)
        np.testing.assert_array_equal(out, [[8.0, 3.0, 0.0]])

    def test_equal_inputs_on_union(self):
        rng = np.random.default_rng(4)
        blk = rng.standard_normal((5, 6))
        in_r = rng.random((5, 6)) < 0.4
        in_c = rng.random((5, 6)) < 0.4
        out = union_sum(blk, blk, in_r, in_c, 2.0, 2.0)
        union = in_r | in_c
        np.testing.assert_allclose(out[union], blk[union], rtol=0, atol=1e-15)
        self.assertFalse(out[~union].any())

    def test_zero_step_sum(self):
        t = np.array([[True]])
        with self.assertRaises(ArgumentError):
            union_sum(np.ones((1, 1)), np.ones((1, 1)), t, t, 1.0, -1.0)


class RestrictedReconstructTests(SimpleTestCase):

    def test_hand_rank_one(self):
        x = np.array([[1.0, 2.0], [2.0, 4.0]])
        f = CurFactors.from_dense(x, IndexSet.from_iterable([0], 2), IndexSet.from_iterable([0], 2), 1)
        np.testing.assert_allclose(restricted_reconstruct(f, "rows"), [[1.0, 2.0]], atol=1e-14)
        np.testing.assert_allclose(restricted_reconstruct(f, "cols"), [[1.0], [2.0]], atol=1e-14)

    def test_full_column_set(self):
        x = gen_low_rank(7, 5, 2, np.random.default_rng(2))
        f = CurFactors.from_dense(x, IndexSet.from_iterable([0, 3, 6], 7), IndexSet.all(5), 2)
        np.testing.assert_allclose(restricted_reconstruct(f, "cols"), x, atol=1e-10)
        np.testing.assert_allclose(materialize(f), x, atol=1e-10)

    def test_bad_panel_name(self):
        x = np.ones((2, 2))
        f = CurFactors.from_dense(x, IndexSet.all(2), IndexSet.all(2), 1)
        with self.assertRaises(ArgumentError):
            restricted_reconstruct(f, "diagonal")


class ComputeErrorTests(SimpleTestCase):

    def single_entry(self, y_value):
        shape = (2, 2)
        I = IndexSet.from_iterable([0], 2)
        J = IndexSet.from_iterable([0], 2)
        return CcsObservation.from_value_map(
            shape, I, J, Mask.from_pairs([(0, 0)], shape), Mask.empty(shape), {(0, 0): y_value},
        )

    def test_single_entry_ratio(self):
        """Ω={(0,0)}, y=2, x+s=1 → 0.25"""
        obs = self.single_entry(2.0)
        f = CurFactors.from_dense(np.array([[1.0, 0.0], [0.0, 0.0]]), obs.row_idx, obs.col_idx, 1)
        self.assertAlmostEqual(compute_error(obs, f, SparseCross.zeros(obs)), 0.25, places=14)

    def test_zero_residual(self):
        problem, obs = sampled_problem(40, 2, 0.0, 1.0, seed=5, row_frac=0.5, p=0.5)
        f = CurFactors.from_dense(problem.x_true, obs.row_idx, obs.col_idx, 2)
        self.assertLess(compute_error(obs, f, SparseCross.zeros(obs)), 1e-24)

    def test_scale_invariance(self):
        problem, obs = sampled_problem(30, 2, 0.1, 5.0, seed=6, row_frac=0.5, p=0.5)
        x = gen_low_rank(30, 30, 2, np.random.default_rng(7))
        f1 = CurFactors.from_dense(x, obs.row_idx, obs.col_idx, 2)
        f2 = CurFactors.from_dense(2 * x, obs.row_idx, obs.col_idx, 2)
        s1 = SparseCross.zeros(obs)
        e1 = compute_error(obs, f1, s1)
        e2 = compute_error(scaled(obs, 2.0), f2, s1)
        self.assertAlmostEqual(e1, e2, places=12)

    def test_all_zero_observations(self):
        obs = self.single_entry(0.0)
        f = CurFactors.zeros(obs, 1)
        with self.assertRaises(NumericError):
            compute_error(obs, f, SparseCross.zeros(obs))


class RcurcStepTests(SimpleTestCase):

    def test_first_step_from_zero(self):
        """X_0 = 0, S_1 = 0 → R_1 = η_R·𝒫_{Ω_R}(Y) fuera de J"""
        problem, obs = sampled_problem(50, 2, 0.0, 1.0, seed=8, row_frac=0.4, p=0.5)
        cfg = SolverConfig(rank=2, zeta0=10 * obs.max_abs_value())
        f1, s1 = rcurc_step(obs, CurFactors.zeros(obs, 2), cfg, 0)
        self.assertEqual(s1.nnz, 0)
        rp = obs.row_panel()
        eta_r = cfg.resolved(obs).eta_r
        off_j = ~obs.col_idx.contains(np.arange(50))
        expected = eta_r * np.where(rp.own, rp.values, 0.0)
        np.testing.assert_allclose(f1.r_mat[:, off_j], expected[:, off_j], rtol=0, atol=1e-14)

    def test_full_observation_projects_panels(self):
        """Observación completa de los paneles, S=0, η=1 → un paso da la proyección de rango r"""
        rng = np.random.default_rng(9)
        y = gen_low_rank(40, 40, 3, rng) + 0.01 * rng.standard_normal((40, 40))
        obs = ccs_sample(y, 0.5, 0.5, 1.0, 1.0, rng)
        cfg = SolverConfig(rank=3, zeta0=10 * obs.max_abs_value())
        f1, _ = rcurc_step(obs, CurFactors.zeros(obs, 3), cfg, 0)
        I, J = obs.row_idx.values, obs.col_idx.values
        core = rank_r_project(y[np.ix_(I, J)], 3)
        np.testing.assert_allclose(f1.u.reconstruct(), core, atol=1e-12)
        off_j = ~obs.col_idx.contains(np.arange(40))
        off_i = ~obs.row_idx.contains(np.arange(40))
        np.testing.assert_allclose(f1.r_mat[:, off_j], y[I][:, off_j], atol=1e-14)
        np.testing.assert_allclose(f1.c[off_i], y[:, J][off_i], atol=1e-14)

    def test_core_copies_agree(self):
        _, obs = sampled_problem(60, 3, 0.1, 10.0, seed=10, row_frac=0.4, p=0.5)
        f, _ = rcurc_step(obs, CurFactors.zeros(obs, 3), SolverConfig(rank=3), 0)
        f, _ = rcurc_step(obs, f, SolverConfig(rank=3), 1)
        I, J = obs.row_idx.values, obs.col_idx.values
        core = f.u.reconstruct()
        np.testing.assert_array_equal(f.c[I, :], core)
        np.testing.assert_array_equal(f.r_mat[:, J], core)

    def test_converged_state_is_fixed_point(self):
        rng = np.random.default_rng(11)
        x = gen_low_rank(60, 60, 2, rng)
        s = gen_sparse_outliers(x, 0.1, 10.0, rng)
        obs = ccs_sample(x + s, 0.5, 0.5, 0.6, 0.6, rng)
        observed = obs.union_mask()
        s_obs = s[observed.rows, observed.cols]
        zeta0 = 0.5 * np.abs(s_obs[s_obs != 0]).min()
        f = CurFactors.from_dense(x, obs.row_idx, obs.col_idx, 2)

        f_next, s_next = rcurc_step(obs, f, SolverConfig(rank=2, zeta0=zeta0), 0)

        self.assertLessEqual(rel_diff(f_next.r_mat, f.r_mat), 1e-12)
        self.assertLessEqual(rel_diff(f_next.c, f.c), 1e-12)
        self.assertLessEqual(rel_diff(f_next.u.reconstruct(), f.u.reconstruct()), 1e-12)
        expected = {p for p, v in zip(observed.to_pairs(), s_obs) if v != 0}
        self.assertEqual(set(s_next.entries()), expected)

    def test_svd_failure_reports_iteration(self):
        _, obs = sampled_problem(30, 2, 0.0, 1.0, seed=12, row_frac=0.5, p=0.5)
        with mock.patch("solver.rcurc.truncated_svd", side_effect=NumericError("SVD did not converge")):
            with self.assertRaises(NumericError) as ctx:
                rcurc_step(obs, CurFactors.zeros(obs, 2), SolverConfig(rank=2), 4)
        self.assertEqual(ctx.exception.iteration, 5)

    def test_foreign_index_sets(self):
        _, obs = sampled_problem(30, 2, 0.0, 1.0, seed=13, row_frac=0.5, p=0.5)
        _, other = sampled_problem(30, 2, 0.0, 1.0, seed=14, row_frac=0.5, p=0.5)
        with self.assertRaises(ArgumentError):
            rcurc_step(obs, CurFactors.zeros(other, 2), SolverConfig(rank=2), 0)


class SolverConfigTests(SimpleTestCase):

    def test_invalid_values(self):
        for kwargs in ({"gamma": 1.0}, {"gamma": 0.0}, {"eps": 0.0}, {"max_iters": 0}, {"eta_r": -1.0}):
            with self.assertRaises(ArgumentError):
                SolverConfig(rank=2, **kwargs)

    def test_from_settings_defaults(self):
        cfg = SolverConfig.from_settings(4, eps=1e-6, gamma=None)
        self.assertEqual(cfg.rank, 4)
        self.assertEqual(cfg.gamma, 0.65)
        self.assertEqual(cfg.eps, 1e-6)
        self.assertEqual(cfg.max_iters, 500)
        self.assertEqual(cfg.eta_r, "auto")

    def test_auto_resolution(self):
        _, obs = sampled_problem(40, 2, 0.0, 1.0, seed=15, row_frac=0.5, p=0.25)
        cfg = SolverConfig(rank=2).resolved(obs)
        self.assertAlmostEqual(cfg.eta_r, 4.0)
        self.assertAlmostEqual(cfg.eta_c, 4.0)
        self.assertEqual(cfg.zeta0, obs.max_abs_value())

    def test_auto_step_needs_observations(self):
        shape = (3, 3)
        obs = CcsObservation.from_value_map(
            shape, IndexSet.all(3), IndexSet.all(3), Mask.empty(shape), Mask.from_pairs([(0, 0)], shape), {(0, 0): 1.0},
        )
        with self.assertRaises(ArgumentError):
            SolverConfig(rank=1).resolved(obs)


class SolveTests(SimpleTestCase):

    def test_noiseless_exact_cur(self):
        """α=0, paneles completos y rango exacto → e_k ≤ 1e-10 en ≤ 3 iteraciones"""
        rng = np.random.default_rng(16)
        y = gen_low_rank(80, 80, 4, rng)
        obs = ccs_sample(y, 0.3, 0.3, 1.0, 1.0, rng)
        cfg = SolverConfig(rank=4, zeta0=2 * obs.max_abs_value(), eps=1e-10, max_iters=3)
        report = solve(obs, cfg, clock=None)
        self.assertIs(report.termination, Termination.CONVERGED)
        self.assertLessEqual(report.iterations, 3)
        self.assertLessEqual(report.final_error, 1e-10)

    def test_large_eps_single_iteration(self):
        _, obs = sampled_problem(40, 2, 0.1, 10.0, seed=17, row_frac=0.5, p=0.5)
        report = solve(obs, SolverConfig(rank=2, eps=10.0))
        self.assertEqual(report.iterations, 1)
        self.assertIs(report.termination, Termination.CONVERGED)
        self.assertEqual(report.trace[0].iter, 1)
        self.assertEqual(report.trace[0].zeta_k, report.zeta0)

    def test_max_iters(self):
        _, obs = sampled_problem(40, 2, 0.1, 10.0, seed=18, row_frac=0.5, p=0.5)
        report = solve(obs, SolverConfig(rank=2, eps=1e-30, max_iters=2))
        self.assertIs(report.termination, Termination.MAX_ITERS)
        self.assertEqual([row.iter for row in report.trace], [1, 2])

    def test_stagnation_guard(self):
        _, obs = sampled_problem(40, 2, 0.1, 10.0, seed=19, row_frac=0.5, p=0.5)
        with mock.patch("solver.rcurc._residual_energy", return_value=1.0):
            report = solve(obs, SolverConfig(rank=2, eps=1e-30, max_iters=100))
        self.assertIs(report.termination, Termination.STAGNATED)
        self.assertEqual(report.iterations, 11)

    def test_rank_larger_than_core(self):
        _, obs = sampled_problem(20, 2, 0.0, 1.0, seed=20, row_frac=0.1, p=0.5)
        with self.assertRaises(ArgumentError):
            solve(obs, SolverConfig(rank=3))

    def test_failure_keeps_last_report(self):
        _, obs = sampled_problem(40, 2, 0.1, 10.0, seed=21, row_frac=0.5, p=0.5)
        calls = {"n": 0}

        def flaky(m, r):
            calls["n"] += 1
            if calls["n"] == 3:
                raise NumericError("SVD did not converge")
            return truncated_svd(m, r)

        with mock.patch("solver.rcurc.truncated_svd", side_effect=flaky):
            with self.assertRaises(SolverError) as ctx:
                solve(obs, SolverConfig(rank=2, eps=1e-30))
        self.assertEqual(ctx.exception.iteration, 3)
        self.assertEqual(ctx.exception.stage, "solve")
        self.assertEqual(ctx.exception.report.iterations, 2)

    def test_sparse_support_inside_observations(self):
        _, obs = sampled_problem(60, 3, 0.1, 10.0, seed=22, row_frac=0.4, p=0.5)
        report = solve(obs, SolverConfig(rank=3, max_iters=20))
        self.assertGreater(report.sparse.nnz, 0)
        self.assertEqual(len(report.sparse.support().difference(obs.union_mask())), 0)

    def test_equivariance(self):
        """Y y ζ_0 escalados por β → factores escalados por β"""
        _, obs = sampled_problem(60, 2, 0.05, 5.0, seed=23, row_frac=0.4, p=0.5)
        cfg = SolverConfig(rank=2, eps=1e-30, max_iters=8, stagnation_window=1000)
        base = solve(obs, cfg, clock=None)
        twice = solve(scaled(obs, 2.0), cfg, clock=None)
        self.assertEqual(twice.zeta0, 2 * base.zeta0)
        np.testing.assert_allclose(twice.factors.r_mat, 2 * base.factors.r_mat, rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(twice.factors.c, 2 * base.factors.c, rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose([e.e_k for e in twice.trace], [e.e_k for e in base.trace], rtol=1e-8)

    def test_deterministic_trace_without_clock(self):
        _, obs = sampled_problem(60, 3, 0.1, 10.0, seed=24, row_frac=0.4, p=0.5)
        cfg = SolverConfig(rank=3, max_iters=15)
        a = solve(obs, cfg, clock=None)
        b = solve(obs, cfg, clock=None)
        self.assertEqual(a.trace, b.trace)
        self.assertTrue(all(row.wall_ms == 0.0 for row in a.trace))

    def test_memory_stays_at_panel_scale(self):
        """pico real (tracemalloc) ≤ PANEL_COPIES juegos de paneles y ningún buffer n1×n2"""
        _, obs = sampled_problem(120, 3, 0.1, 10.0, seed=25)
        ledger = BufferLedger()
        solve(obs, SolverConfig(rank=3, max_iters=5), ledger=ledger)
        self.assertGreater(len(ledger), 0)
        self.assertFalse(ledger.has_shape(obs.shape))
        self.assertLess(ledger.largest()[2], 0.4 * dense_footprint(obs.shape))
        self.assertGreaterEqual(ledger.peak_bytes(), panel_footprint(obs))
        self.assertLessEqual(ledger.peak_bytes(), PANEL_COPIES * panel_footprint(obs))

    def test_thin_cross_needs_less_than_dense(self):
        """con 5% de filas/columnas el pico de toda la ejecución queda por debajo de la Y densa"""
        _, obs = sampled_problem(400, 3, 0.1, 10.0, seed=27, row_frac=0.05)
        ledger = BufferLedger()
        solve(obs, SolverConfig(rank=3, max_iters=4), ledger=ledger)
        self.assertLess(ledger.peak_bytes(), dense_footprint(obs.shape))

    @tag("slow")
    def test_memory_stays_at_panel_scale_at_scale(self):
        """d=2000 con 30% de filas/columnas: ningún buffer d×d, pico ≤ PANEL_COPIES juegos de paneles"""
        _, obs = sampled_problem(2000, 5, 0.1, 10.0, seed=26)
        ledger = BufferLedger()
        solve(obs, SolverConfig(rank=5, max_iters=3), ledger=ledger)
        self.assertFalse(ledger.has_shape((2000, 2000)))
        self.assertLess(ledger.largest()[2], 0.4 * dense_footprint((2000, 2000)))
        self.assertLessEqual(ledger.peak_bytes(), PANEL_COPIES * panel_footprint(obs))


class BufferLedgerTests(SimpleTestCase):

    def test_watch_counts_freed_temporaries(self):
        ledger = BufferLedger()
        with ledger.watch():
            total = np.ones(100_000).sum()
        self.assertEqual(total, 100_000.0)
        self.assertGreaterEqual(ledger.peak_bytes(), 800_000)
        self.assertEqual(len(ledger), 0)

    def test_empty_ledger_is_used(self):
        """un ledger recién creado (len 0) recibe igualmente las anotaciones"""
        _, obs = sampled_problem(40, 2, 0.0, 1.0, seed=5)
        ledger = BufferLedger()
        solve(obs, SolverConfig(rank=2, max_iters=2), ledger=ledger)
        names = {name for name, _, _ in ledger.records}
        self.assertTrue({"x_rows", "x_cols", "s_rows", "s_cols", "core"} <= names)
        self.assertGreater(ledger.peak_bytes(), 0)

    def test_panel_footprint(self):
        _, obs = sampled_problem(50, 2, 0.0, 1.0, seed=6, row_frac=0.2)
        self.assertEqual(panel_footprint(obs), 8 * (10 * 50 + 50 * 10))


@tag("slow")
class DeskScaleConvergenceTests(SimpleTestCase):
    """d=500, r=5, 30% filas/columnas, 25% en cada panel, parámetros por defecto."""

    def run_cell(self, alpha, c, seed=2024):
        problem, obs = sampled_problem(500, 5, alpha, c, seed)
        report = solve(obs, SolverConfig.from_settings(5), clock=None)
        return problem, report

    def test_converges_with_linear_rate(self):
        problem, report = self.run_cell(0.1, 10.0)
        self.assertIs(report.termination, Termination.CONVERGED)
        self.assertLessEqual(report.iterations, 150)
        self.assertLessEqual(recovery_error(materialize(report.factors), problem.x_true), 1e-3)
        fit = fit_linear_rate(report.trace)
        self.assertLess(fit.slope, 0.0)
        self.assertGreaterEqual(fit.r2, 0.95)

    def test_robustness_sweep(self):
        for alpha in (0.05, 0.1, 0.2):
            for c in (1.0, 10.0):
                with self.subTest(alpha=alpha, c=c):
                    problem, report = self.run_cell(alpha, c)
                    self.assertIs(report.termination, Termination.CONVERGED)
                    self.assertLessEqual(recovery_error(materialize(report.factors), problem.x_true), 1e-2)

    def test_same_seed_same_trace(self):
        _, first = self.run_cell(0.1, 10.0)
        _, second = self.run_cell(0.1, 10.0)
        self.assertEqual(first.trace, second.trace)
