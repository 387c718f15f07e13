import json
import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from core.utils.errors import ArgumentError, FormatError
from matrixio.codec import read_matrix, read_matrix_csv, write_matrix, write_matrix_csv
from matrixio.factors import read_factors, write_factors
from matrixio.frames import frames_to_matrix, matrix_to_frames, read_frame, read_frames_list
from matrixio.observations import read_observation, write_observation
from matrixio.summaries import read_summary, write_summary
from matrixio.traces import read_trace, write_trace
from problems.generators import make_synthetic_problem
from sampling.ccs import ccs_sample
from sampling.masks import CcsObservation, IndexSet, Mask
from solver.rcurc import materialize, solve
from solver.structures import SolveReport, SolverConfig, Termination, TraceEntry


def pgm_bytes(frame, maxval=255, magic=b"P5", comment=False):
    frame = np.asarray(frame, dtype=np.uint8)
    height, width = frame.shape
    header = magic + b"\n"
    if comment:
        header += b"# generado en tests\n"
    header += f"{width} {height}\n{maxval}\n".encode()
    return header + frame.tobytes()


class WorkDirMixin:

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()


class MatrixCodecTests(WorkDirMixin, SimpleTestCase):

    def test_round_trip_is_bit_identical(self):
        m = np.random.default_rng(0).standard_normal((100, 80))
        path = self.tmp / "m.rcm"
        write_matrix(path, m)
        self.assertEqual(path.stat().st_size, 28 + 100 * 80 * 8)
        self.assertEqual(read_matrix(path).tobytes(), m.tobytes())

    def test_truncated_file(self):
        path = self.tmp / "m.rcm"
        write_matrix(path, np.ones((4, 5)))
        path.write_bytes(path.read_bytes()[:-8])
        with self.assertRaises(FormatError) as ctx:
            read_matrix(path)
        self.assertIn("expected 188 bytes, got 180", str(ctx.exception))
        self.assertEqual(ctx.exception.offset, 180)
        self.assertEqual(ctx.exception.stage, "io")

    def test_bad_magic_and_version(self):
        path = self.tmp / "m.rcm"
        write_matrix(path, np.ones((2, 2)))
        data = bytearray(path.read_bytes())
        bad_magic = bytes(b"XXXXXXXX" + data[8:])
        path.write_bytes(bad_magic)
        with self.assertRaises(FormatError) as ctx:
            read_matrix(path)
        self.assertEqual(ctx.exception.offset, 0)

        data[8] = 2
        path.write_bytes(bytes(data))
        with self.assertRaises(FormatError) as ctx:
            read_matrix(path)
        self.assertEqual(ctx.exception.offset, 8)

    def test_short_header(self):
        path = self.tmp / "m.rcm"
        path.write_bytes(b"RCURC")
        with self.assertRaises(FormatError):
            read_matrix(path)

    def test_degenerate_shape_rejected(self):
        with self.assertRaises(ArgumentError):
            write_matrix(self.tmp / "m.rcm", np.zeros((0, 0)))

    def test_csv_round_trip(self):
        m = np.random.default_rng(1).standard_normal((7, 3)) * 1e5
        path = self.tmp / "m.csv"
        write_matrix_csv(path, m)
        np.testing.assert_array_equal(read_matrix_csv(path), m)

    def test_csv_garbage(self):
        path = self.tmp / "m.csv"
        path.write_text("1,2\nthree,4\n")
        with self.assertRaises(FormatError):
            read_matrix_csv(path)


class FrameTests(WorkDirMixin, SimpleTestCase):

    def write(self, name, frame, **kwargs):
        path = self.tmp / name
        path.write_bytes(pgm_bytes(frame, **kwargs))
        return path

    def test_shape_arithmetic(self):
        """2 frames de 3×4 → matriz 12×2"""
        paths = [self.write(f"f{t}.pgm", np.full((4, 3), 10 * t)) for t in range(2)]
        self.assertEqual(frames_to_matrix(paths).shape, (12, 2))

    def test_constant_gray(self):
        paths = [self.write(f"g{t}.pgm", np.full((5, 6), 128), comment=True) for t in range(3)]
        m = frames_to_matrix(paths)
        self.assertTrue(np.all(m == 128.0))
        self.assertEqual(m.dtype, np.float64)

    def test_column_major_vectorization(self):
        path = self.write("a.pgm", [[1, 2], [3, 4]])
        np.testing.assert_array_equal(frames_to_matrix([path])[:, 0], [1, 3, 2, 4])

    def test_rejects_mixed_dimensions(self):
        a = self.write("a.pgm", np.zeros((4, 3)))
        b = self.write("b.pgm", np.zeros((3, 4)))
        with self.assertRaises(FormatError):
            frames_to_matrix([a, b])

    def test_low_maxval_keeps_raw_samples(self):
        """maxval=15: las muestras 0..15 se leen sin reescalar a 255"""
        frame = np.arange(16).reshape(4, 4)
        path = self.write("low.pgm", frame, maxval=15)
        np.testing.assert_array_equal(read_frame(path), frame.astype(np.float64))

    def test_rejects_sample_above_maxval(self):
        path = self.write("over.pgm", [[1, 2], [16, 3]], maxval=15)
        with self.assertRaises(FormatError) as ctx:
            read_frame(path)
        header_len = len(b"P5\n2 2\n15\n")
        self.assertEqual(ctx.exception.offset, header_len + 2)

    def test_rejects_ascii_and_sixteen_bit(self):
        ascii_path = self.tmp / "p2.pgm"
        ascii_path.write_bytes(b"P2\n2 1\n255\n0 1\n")
        with self.assertRaises(FormatError):
            frames_to_matrix([ascii_path])
        wide = self.tmp / "p16.pgm"
        wide.write_bytes(b"P5\n1 1\n65535\n\x00\x01")
        with self.assertRaises(FormatError):
            frames_to_matrix([wide])

    def test_no_frames(self):
        with self.assertRaises(ArgumentError):
            frames_to_matrix([])

    def test_export_then_import(self):
        m = np.random.default_rng(2).integers(0, 256, size=(20, 3)).astype(np.float64)
        m[0, 0] = 300.0
        paths = matrix_to_frames(m, 4, 5, self.tmp / "out", prefix="bg")
        self.assertEqual([p.name for p in paths], ["bg_0000.pgm", "bg_0001.pgm", "bg_0002.pgm"])
        back = frames_to_matrix(paths)
        expected = m.copy()
        expected[0, 0] = 255.0
        np.testing.assert_array_equal(back, expected)

    def test_frames_list_keeps_order(self):
        for name in ("b.pgm", "a.pgm"):
            self.write(name, np.zeros((2, 2)))
        listing = self.tmp / "frames.txt"
        listing.write_text("# orden explícito\nb.pgm\n\na.pgm\n")
        self.assertEqual([p.name for p in read_frames_list(listing)], ["b.pgm", "a.pgm"])


class ObservationFileTests(WorkDirMixin, SimpleTestCase):

    def sample(self, seed=3):
        rng = np.random.default_rng(seed)
        problem = make_synthetic_problem(30, 25, 2, 0.1, 10.0, rng)
        return ccs_sample(problem.y, 0.4, 0.4, 0.5, 0.5, rng)

    def test_round_trip(self):
        obs = self.sample()
        path = self.tmp / "obs.json"
        write_observation(path, obs)
        self.assertEqual(read_observation(path), obs)

    def test_sorted_keys_and_schema(self):
        path = self.tmp / "obs.json"
        write_observation(path, self.sample())
        doc = json.loads(path.read_text())
        self.assertEqual(doc["schema"], 1)
        self.assertEqual(list(doc), sorted(doc))
        pairs = [tuple(v[:2]) for v in doc["values"]]
        self.assertEqual(pairs, sorted(pairs))

    def test_empty_masks(self):
        shape = (3, 4)
        obs = CcsObservation.from_value_map(
            shape, IndexSet.from_iterable([1], 3), IndexSet.from_iterable([2], 4),
            Mask.empty(shape), Mask.empty(shape), {},
        )
        path = self.tmp / "empty.json"
        write_observation(path, obs)
        back = read_observation(path)
        self.assertEqual(back, obs)
        self.assertEqual(back.values_r.size, 0)

    def test_mask_entry_outside_rows(self):
        path = self.tmp / "obs.json"
        write_observation(path, self.sample())
        doc = json.loads(path.read_text())
        outside = next(i for i in range(30) if i not in doc["row_idx"])
        doc["omega_r"].append([outside, 0])
        doc["values"].append([outside, 0, 1.0])
        doc["values"].sort(key=lambda v: (v[0], v[1]))
        path.write_text(json.dumps(doc))
        with self.assertRaises(FormatError):
            read_observation(path)

    def test_schema_violations(self):
        path = self.tmp / "obs.json"
        write_observation(path, self.sample())
        doc = json.loads(path.read_text())
        for key, value in (("schema", 2), ("shape", [30]), ("values", doc["values"][:-1])):
            broken = dict(doc, **{key: value})
            path.write_text(json.dumps(broken))
            with self.subTest(key=key), self.assertRaises(FormatError):
                read_observation(path)

    def test_not_json(self):
        path = self.tmp / "obs.json"
        path.write_text("{not json")
        with self.assertRaises(FormatError):
            read_observation(path)


class TraceFileTests(WorkDirMixin, SimpleTestCase):

    def report(self):
        trace = [
            TraceEntry(1, 0.1234567890123456789, 10.0, 1.5),
            TraceEntry(2, 1.0 / 3.0, 6.5, 2.25),
            TraceEntry(3, math.pi * 1e-7, 4.225, 3.0),
        ]
        return SolveReport(
            trace=trace, termination=Termination.CONVERGED, factors=None, sparse=None,
            eta_r=4.0, eta_c=4.0, zeta0=10.0,
        )

    def test_layout(self):
        path = self.tmp / "trace.csv"
        write_trace(path, self.report())
        lines = path.read_text().splitlines()
        self.assertEqual(lines[0], "iter,e_k,zeta_k,wall_ms")
        self.assertEqual(len([line for line in lines if not line.startswith("#")]), 4)
        self.assertEqual(lines[-1], "# termination=converged")

    def test_values_parse_back(self):
        path = self.tmp / "trace.csv"
        report = self.report()
        write_trace(path, report)
        rows, termination = read_trace(path)
        self.assertEqual(rows, report.trace)
        self.assertEqual(termination, "converged")

    def test_missing_header(self):
        path = self.tmp / "trace.csv"
        path.write_text("1,0.5,1,0\n")
        with self.assertRaises(FormatError):
            read_trace(path)

    def test_same_seed_same_bytes(self):
        paths = []
        for run in range(2):
            rng = np.random.default_rng(77)
            problem = make_synthetic_problem(80, 80, 2, 0.1, 10.0, rng)
            obs = ccs_sample(problem.y, 0.3, 0.3, 0.5, 0.5, rng)
            report = solve(obs, SolverConfig(rank=2, max_iters=20), clock=None)
            path = self.tmp / f"trace_{run}.csv"
            write_trace(path, report)
            paths.append(path)
        self.assertEqual(paths[0].read_bytes(), paths[1].read_bytes())


class SummaryAndFactorFileTests(WorkDirMixin, SimpleTestCase):

    def test_summary_schema_and_infinity(self):
        path = self.tmp / "summary.json"
        write_summary(path, {"psnr_db": math.inf, "final_e_k": 1e-5, "termination": "converged"})
        doc = read_summary(path)
        self.assertEqual(doc["schema"], 1)
        self.assertEqual(doc["psnr_db"], "inf")
        text = path.read_text()
        self.assertLess(text.index('"final_e_k"'), text.index('"psnr_db"'))

    def test_summary_wrong_schema(self):
        path = self.tmp / "summary.json"
        path.write_text('{"schema": 7}')
        with self.assertRaises(FormatError):
            read_summary(path)

    def test_factors_round_trip(self):
        rng = np.random.default_rng(5)
        problem = make_synthetic_problem(50, 40, 2, 0.1, 10.0, rng)
        obs = ccs_sample(problem.y, 0.4, 0.4, 0.5, 0.5, rng)
        report = solve(obs, SolverConfig(rank=2, max_iters=10), clock=None)
        path = self.tmp / "factors.npz"
        write_factors(path, report.factors)
        back = read_factors(path)
        self.assertEqual(back.row_idx, report.factors.row_idx)
        np.testing.assert_array_equal(materialize(back), materialize(report.factors))

    def test_factors_garbage(self):
        path = self.tmp / "factors.npz"
        path.write_bytes(b"not a zip")
        with self.assertRaises(FormatError):
            read_factors(path)
