import json
import tempfile
from io import StringIO
from pathlib import Path

import yaml
from django.core.management import CommandError, call_command
from django.test import SimpleTestCase, override_settings, tag

from core.utils.errors import ArgumentError
from experiments.runner import apply_overrides, build_config, derive_seed, load_config, run_experiment
from matrixio.observations import read_observation
from matrixio.summaries import read_summary
from matrixio.traces import read_trace


def small_config(out, **changes):
    doc = {
        "seed": 11,
        "problem": {"kind": "synthetic", "n1": 60, "n2": 50, "rank": 2, "alpha": 0.1, "amp": 10.0},
        "sampling": {"row_frac": 0.5, "col_frac": 0.5, "p_row": 0.5, "p_col": 0.5},
        "solver": {"max_iters": 40},
        "outputs": str(out),
        "timing": False,
    }
    return apply_overrides(doc, changes)


class WorkDirMixin:

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def write_config(self, doc, name="experiment.yaml"):
        path = self.tmp / name
        path.write_text(yaml.safe_dump(doc) if name.endswith(".yaml") else json.dumps(doc))
        return path

    def call(self, name, **options):
        stdout, stderr = StringIO(), StringIO()
        call_command(name, stdout=stdout, stderr=stderr, **options)
        return json.loads(stdout.getvalue())


class ConfigTests(WorkDirMixin, SimpleTestCase):

    def test_overrides_use_dotted_keys(self):
        doc = apply_overrides({"solver": {"eps": 1e-4}}, {"solver.eps": 1e-6, "solver.gamma": None, "seed": 3})
        self.assertEqual(doc, {"solver": {"eps": 1e-6}, "seed": 3})

    def test_seeds_are_offsets(self):
        self.assertEqual([derive_seed(41, i) for i in range(3)], [41, 42, 43])

    def test_solver_rank_defaults_to_problem_rank(self):
        cfg = build_config(small_config(self.tmp / "out"))
        self.assertEqual(cfg.solver["rank"], 2)
        solver_cfg = cfg.solver_config()
        self.assertEqual(solver_cfg.max_iters, 40)
        self.assertEqual(solver_cfg.gamma, 0.65)

    def test_video_rank_defaults_to_one(self):
        doc = small_config(self.tmp / "out")
        doc["problem"] = {"kind": "video", "height": 8, "width": 6, "frames": 20, "alpha": 0.05}
        self.assertEqual(build_config(doc).solver["rank"], 1)

    def test_invalid_values(self):
        for key, value in (("problem.alpha", 0.7), ("sampling.p_row", 0.0), ("solver.gamma", 1.5), ("solver.eta_r", "fast")):
            with self.subTest(key=key), self.assertRaises(ArgumentError) as ctx:
                build_config(small_config(self.tmp / "out", **{key: value}))
            self.assertEqual(ctx.exception.stage, "config")

    def test_missing_kind_fields(self):
        doc = small_config(self.tmp / "out")
        doc["problem"] = {"kind": "frames"}
        with self.assertRaises(ArgumentError):
            build_config(doc)

    def test_yaml_paths_relative_to_file(self):
        doc = small_config("out")
        doc["problem"]["truth"] = "x_true.rcm"
        cfg = load_config(self.write_config(doc))
        self.assertEqual(cfg.outputs, self.tmp.resolve() / "out")
        self.assertEqual(Path(cfg.problem["truth"]), self.tmp.resolve() / "x_true.rcm")

    def test_json_config_with_cli_overrides(self):
        path = self.write_config(small_config(self.tmp / "out"), name="experiment.json")
        cfg = load_config(path, {"solver.eps": 1e-6, "repeats": 4})
        self.assertEqual(cfg.solver["eps"], 1e-6)
        self.assertEqual(cfg.repeats, 4)


class RunCommandTests(WorkDirMixin, SimpleTestCase):

    def test_repeats_inventory(self):
        """repeats=3 → tres trazas, tres observaciones y un único resumen"""
        out = self.tmp / "out"
        config = self.write_config(small_config(out))
        result = self.call("run", config=str(config), repeats=3)
        self.assertEqual(result["repeats"], 3)
        names = sorted(p.name for p in out.iterdir())
        self.assertEqual(names, [
            "observation_000.json", "observation_001.json", "observation_002.json", "summary.json",
            "trace_000.csv", "trace_001.csv", "trace_002.csv",
        ])
        summary = read_summary(out / "summary.json")
        self.assertEqual(summary["schema"], 1)
        self.assertEqual(summary["seeds"], [11, 12, 13])
        self.assertIn("recovery_error", summary["aggregate"]["fields"])
        rows, termination = read_trace(out / "trace_001.csv")
        self.assertEqual(termination, summary["repeats"][1]["termination"])
        self.assertEqual(len(rows), summary["repeats"][1]["iterations"])

    def test_same_seed_same_outputs(self):
        out = self.tmp / "out"
        config = self.write_config(small_config(out))
        self.call("run", config=str(config), repeats=2)
        first = {p.name: p.read_bytes() for p in out.iterdir()}
        self.call("run", config=str(config), repeats=2, workers=2)
        second = {p.name: p.read_bytes() for p in out.iterdir()}
        self.assertEqual(first, second)

    def test_celery_executor_matches_threads(self):
        threads = run_experiment(build_config(small_config(self.tmp / "a", repeats=2)))
        celery = run_experiment(build_config(small_config(self.tmp / "b", repeats=2)), executor="celery")
        self.assertEqual(threads.summary["repeats"], celery.summary["repeats"])

    def test_missing_input_path(self):
        doc = small_config(self.tmp / "out")
        doc["problem"] = {"kind": "matrix", "matrix": str(self.tmp / "nope.rcm"), "rank": 2}
        config = self.write_config(doc)
        with self.assertRaises(CommandError) as ctx:
            self.call("run", config=str(config))
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertTrue(str(ctx.exception).startswith("stage=io"))

    def test_missing_config_file(self):
        with self.assertRaises(CommandError) as ctx:
            self.call("run", config=str(self.tmp / "missing.yaml"))
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn("stage=io", str(ctx.exception))

    def test_invalid_config(self):
        config = self.write_config(small_config(self.tmp / "out", **{"problem.alpha": 0.9}))
        with self.assertRaises(CommandError) as ctx:
            self.call("run", config=str(config))
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn("stage=config", str(ctx.exception))

    def test_strict_non_convergence(self):
        config = self.write_config(small_config(self.tmp / "out", **{"solver.max_iters": 1, "solver.eps": 1e-30}))
        self.call("run", config=str(config))
        with self.assertRaises(CommandError) as ctx:
            self.call("run", config=str(config), strict=True)
        self.assertEqual(ctx.exception.returncode, 1)

    def test_config_free_run(self):
        out = self.tmp / "flags"
        result = self.call(
            "run", out=str(out), n1=50, n2=40, rank=2, alpha=0.05, row_frac=0.5, col_frac=0.5,
            p_row=0.6, p_col=0.6, max_iters=30, no_timing=True,
        )
        self.assertEqual(result["repeats"], 1)
        summary = read_summary(out / "summary.json")
        self.assertEqual(summary["config"]["solver"]["rank"], 2)
        self.assertEqual(summary["repeats"][0]["runtime_ms"], 0.0)

    def test_observation_problem(self):
        out = self.tmp / "first"
        self.call("run", config=str(self.write_config(small_config(out))))
        doc = small_config(self.tmp / "second")
        doc["problem"] = {"kind": "observation", "observation": str(out / "observation_000.json")}
        doc["solver"]["rank"] = 2
        self.call("run", config=str(self.write_config(doc, name="again.yaml")))
        self.assertEqual(
            (out / "trace_000.csv").read_bytes(),
            (self.tmp / "second" / "trace_000.csv").read_bytes(),
        )

    @override_settings(RCURC_WORKERS=3)
    def test_worker_setting(self):
        out = self.tmp / "out"
        result = self.call("run", config=str(self.write_config(small_config(out))), repeats=3)
        self.assertEqual(result["repeats"], 3)


class StageCommandTests(WorkDirMixin, SimpleTestCase):

    def test_synth_sample_solve_eval(self):
        problem_dir = self.tmp / "problem"
        synth = self.call("synth", n1=60, n2=60, rank=2, alpha=0.05, seed=4, out=str(problem_dir))
        self.assertEqual(synth["shape"], [60, 60])
        self.assertLessEqual(synth["alpha"], 0.05)

        obs_path = self.tmp / "obs.json"
        sampled = self.call(
            "sample", matrix=str(problem_dir / "y.rcm"), row_frac=0.5, col_frac=0.5,
            p_row=0.6, p_col=0.6, seed=5, out=str(obs_path),
        )
        self.assertEqual(sampled["rows"], 30)
        self.assertEqual(read_observation(obs_path).shape, (60, 60))

        solved_dir = self.tmp / "solved"
        solved = self.call(
            "solve", observation=str(obs_path), rank=2, max_iters=60, out=str(solved_dir),
            no_timing=True, export_estimate=True,
        )
        self.assertEqual(solved["schema"], 1)
        for name in ("trace.csv", "factors.npz", "summary.json", "estimate.rcm"):
            self.assertTrue((solved_dir / name).exists(), name)

        from_factors = self.call("eval", factors=str(solved_dir / "factors.npz"), truth=str(problem_dir / "x_true.rcm"))
        from_estimate = self.call("eval", estimate=str(solved_dir / "estimate.rcm"), truth=str(problem_dir / "x_true.rcm"))
        self.assertAlmostEqual(from_factors["recovery_error"], from_estimate["recovery_error"], places=12)

        rate = self.call("eval", trace=str(solved_dir / "trace.csv"))
        self.assertEqual(rate["termination"], solved["termination"])

    def test_sample_rejects_bad_fraction(self):
        problem_dir = self.tmp / "problem"
        self.call("synth", n1=20, n2=20, rank=2, alpha=0.0, out=str(problem_dir))
        with self.assertRaises(CommandError) as ctx:
            self.call("sample", matrix=str(problem_dir / "y.rcm"), row_frac=1.5, out=str(self.tmp / "o.json"))
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn("stage=sample", str(ctx.exception))

    def test_solve_missing_observation(self):
        with self.assertRaises(CommandError) as ctx:
            self.call("solve", observation=str(self.tmp / "none.json"), rank=2, out=str(self.tmp / "o"))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_solve_rank_too_large(self):
        problem_dir = self.tmp / "problem"
        self.call("synth", n1=20, n2=20, rank=2, alpha=0.0, out=str(problem_dir))
        obs_path = self.tmp / "obs.json"
        self.call("sample", matrix=str(problem_dir / "y.rcm"), row_frac=0.1, col_frac=0.1, out=str(obs_path))
        with self.assertRaises(CommandError) as ctx:
            self.call("solve", observation=str(obs_path), rank=5, out=str(self.tmp / "o"))
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn("stage=solve", str(ctx.exception))


@tag("slow")
class VideoSurrogateRunTests(WorkDirMixin, SimpleTestCase):

    def test_background_psnr(self):
        """40×30 × 100 frames, α=0.05, 40% filas/columnas y 30% en los paneles → PSNR ≥ 35 dB"""
        out = self.tmp / "video"
        doc = {
            "seed": 3,
            "problem": {"kind": "video", "height": 40, "width": 30, "frames": 100, "alpha": 0.05},
            "sampling": {"row_frac": 0.4, "col_frac": 0.4, "p_row": 0.3, "p_col": 0.3},
            "outputs": str(out),
        }
        self.call("run", config=str(self.write_config(doc)), export_frames=True)
        summary = read_summary(out / "summary.json")
        repeat = summary["repeats"][0]
        self.assertEqual(repeat["termination"], "converged")
        self.assertGreaterEqual(float(repeat["psnr_db"]), 35.0)
        self.assertEqual(len(list((out / "frames_000").glob("background_*.pgm"))), 100)
