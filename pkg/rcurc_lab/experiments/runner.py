################################################################################################################################
############################## PIPELINE DE EXPERIMENTOS: PROBLEMA → MUESTREO → SOLVE → MÉTRICAS ################################
################################################################################################################################

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
from django.conf import settings

from core.utils.errors import ArgumentError, FormatError, RcurcError
from matrixio.codec import load_any
from matrixio.frames import frames_to_matrix, matrix_to_frames, read_frame, read_frames_list
from matrixio.observations import read_observation, write_observation
from matrixio.summaries import write_summary
from matrixio.traces import write_trace
from metrics.measures import fit_linear_rate, psnr, recovery_error, summarize_repeats
from problems.generators import make_synthetic_problem
from problems.video import make_video_surrogate
from sampling.ccs import ccs_sample
from solver.rcurc import materialize, solve
from solver.structures import SolverConfig
from .serializers import ExperimentConfigSerializer

logger = logging.getLogger(__name__)

PATH_FIELDS = ("frames_list", "matrix", "observation", "truth", "reference")
EIGHT_BIT_PEAK = 255.0


@contextmanager
def stage(name):
    """Etiqueta con `name` los errores que salgan del bloque (los de E/S siempre son 'io')."""
    try:
        yield
    except RcurcError as exc:
        exc.with_stage(name)
        raise
    except OSError as exc:
        if getattr(exc, "stage", None) is None:
            exc.stage = "io"
        raise


def derive_seed(seed, index):
    """Semilla de la repetición `index`: seed + index."""
    return seed + index


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    repeats: int
    timing: bool
    problem: dict
    sampling: dict
    solver: dict
    outputs: Path

    @classmethod
    def from_validated(cls, data):
        return cls(
            seed=int(data["seed"]),
            repeats=int(data["repeats"]),
            timing=bool(data["timing"]),
            problem=dict(data["problem"]),
            sampling=dict(data["sampling"]),
            solver=dict(data["solver"]),
            outputs=Path(data["outputs"]),
        )

    def to_dict(self):
        return {
            "seed": self.seed,
            "repeats": self.repeats,
            "timing": self.timing,
            "problem": dict(self.problem),
            "sampling": dict(self.sampling),
            "solver": dict(self.solver),
            "outputs": str(self.outputs),
        }

    def solver_config(self):
        options = dict(self.solver)
        rank = options.pop("rank")
        return SolverConfig.from_settings(rank, **options)


def _flatten_errors(errors, prefix=""):
    out = []
    for key, value in errors.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.extend(_flatten_errors(value, f"{name}."))
        else:
            out.append(f"{name}: {' '.join(str(v) for v in value)}")
    return out


def build_config(doc):
    """Valida un dict de configuración y devuelve un ExperimentConfig."""
    serializer = ExperimentConfigSerializer(data=doc)
    if not serializer.is_valid():
        raise ArgumentError(f"invalid experiment config: {'; '.join(_flatten_errors(serializer.errors))}", stage="config")
    return serializer.save()


def read_config_file(path):
    """YAML (.yaml/.yml) o JSON (.json). Las rutas relativas se resuelven desde el fichero."""
    path = Path(path)
    with stage("io"):
        text = path.read_text()
    suffix = path.suffix.lower()
    try:
        if suffix in (".yaml", ".yml"):
            doc = yaml.safe_load(text)
        elif suffix == ".json":
            doc = json.loads(text)
        else:
            raise FormatError(f"{path}: config must be .yaml, .yml or .json", stage="config")
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: cannot parse config: {exc}", stage="config") from exc
    doc = doc or {}
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: config must be a mapping", stage="config")

    base = path.resolve().parent
    problem = doc.get("problem")
    if isinstance(problem, dict):
        for key in PATH_FIELDS:
            if isinstance(problem.get(key), str) and not Path(problem[key]).is_absolute():
                problem[key] = str(base / problem[key])
    if isinstance(doc.get("outputs"), str) and not Path(doc["outputs"]).is_absolute():
        doc["outputs"] = str(base / doc["outputs"])
    return doc


def apply_overrides(doc, overrides):
    """Aplica claves con puntos ("solver.eps") sobre el dict; los None se ignoran."""
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        node = doc
        *parents, leaf = dotted.split(".")
        for key in parents:
            node = node.setdefault(key, {})
        node[leaf] = value
    return doc


def load_config(path=None, overrides=None):
    doc = read_config_file(path) if path else {}
    return build_config(apply_overrides(doc, overrides))


@dataclass
class PreparedProblem:
    y: np.ndarray = None
    obs: object = None
    truth: np.ndarray = None
    reference: np.ndarray = None
    peak: object = "auto"
    frame_shape: tuple = None


def prepare_problem(cfg, rng):
    p = cfg.problem
    kind = p["kind"]
    prepared = PreparedProblem(peak=p.get("peak", "auto"))
    if kind == "synthetic":
        problem = make_synthetic_problem(p["n1"], p["n2"], p["rank"], p["alpha"], p["amp"], rng)
        prepared.y, prepared.truth = problem.y, problem.x_true
    elif kind == "video":
        problem = make_video_surrogate(p["height"], p["width"], p["frames"], p["alpha"], rng)
        prepared.y, prepared.truth, prepared.reference = problem.y, problem.x_true, problem.x_true
        prepared.frame_shape = (p["height"], p["width"])
        prepared.peak = p.get("peak", EIGHT_BIT_PEAK)
    elif kind == "frames":
        with stage("io"):
            paths = read_frames_list(p["frames_list"])
            prepared.y = frames_to_matrix(paths)
            prepared.frame_shape = read_frame(paths[0]).shape
        prepared.peak = p.get("peak", EIGHT_BIT_PEAK)
    elif kind == "matrix":
        with stage("io"):
            prepared.y = load_any(p["matrix"])
    else:
        with stage("io"):
            prepared.obs = read_observation(p["observation"])

    with stage("io"):
        if "truth" in p:
            prepared.truth = load_any(p["truth"])
        if "reference" in p:
            prepared.reference = load_any(p["reference"])
    return prepared


def run_repeat(cfg, index, export_frames=False):
    """
    Una repetición completa; escribe observation_NNN.json y trace_NNN.csv en
    cfg.outputs y devuelve el resumen de la repetición.
    """
    seed = derive_seed(cfg.seed, index)
    rng = np.random.default_rng(seed)
    out = cfg.outputs
    tag = f"{index:03d}"

    logger.info(f"repeat {index} (seed={seed}): stage=problem")
    with stage("problem"):
        prepared = prepare_problem(cfg, rng)

    obs = prepared.obs
    if obs is None:
        logger.info(f"repeat {index}: stage=sample")
        with stage("sample"):
            s = cfg.sampling
            obs = ccs_sample(prepared.y, s["row_frac"], s["col_frac"], s["p_row"], s["p_col"], rng)
    with stage("io"):
        write_observation(out / f"observation_{tag}.json", obs)

    logger.info(f"repeat {index}: stage=solve")
    with stage("solve"):
        report = solve(obs, cfg.solver_config(), clock=time.perf_counter if cfg.timing else None)
    with stage("io"):
        write_trace(out / f"trace_{tag}.csv", report)

    logger.info(f"repeat {index}: stage=metrics")
    summary = {
        "repeat": index,
        "seed": seed,
        "termination": str(report.termination),
        "iterations": report.iterations,
        "final_e_k": report.final_error,
        "eta_r": report.eta_r,
        "eta_c": report.eta_c,
        "zeta0": report.zeta0,
        "rank_deficient_steps": report.rank_deficient_steps,
        "sparse_nnz": report.sparse.nnz,
        "observed_entries": len(obs.union_mask()),
        "runtime_ms": report.trace[-1].wall_ms,
        "trace": f"trace_{tag}.csv",
        "observation": f"observation_{tag}.json",
    }
    with stage("metrics"):
        try:
            fit = fit_linear_rate(report.trace)
        except ArgumentError:
            fit = None
        summary["rate_slope"] = fit.slope if fit else None
        summary["rate_r2"] = fit.r2 if fit else None

        if prepared.truth is not None or prepared.reference is not None or export_frames:
            estimate = materialize(report.factors)
            if prepared.truth is not None:
                summary["recovery_error"] = recovery_error(estimate, prepared.truth)
            if prepared.reference is not None:
                summary["psnr_db"] = psnr(prepared.reference, estimate, prepared.peak)
            if export_frames:
                if prepared.frame_shape is None:
                    raise ArgumentError("--export-frames needs a video or frames problem")
                height, width = prepared.frame_shape
                with stage("io"):
                    matrix_to_frames(estimate, height, width, out / f"frames_{tag}", prefix="background")
    return summary


@dataclass
class ExperimentResult:
    summary: dict
    path: Path
    repeats: list = field(default_factory=list)

    @property
    def all_converged(self):
        return all(r["termination"] == "converged" for r in self.repeats)


def _run_threads(cfg, export_frames, workers):
    workers = max(1, workers or settings.RCURC_WORKERS)
    if workers == 1 or cfg.repeats == 1:
        return [run_repeat(cfg, i, export_frames) for i in range(cfg.repeats)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda i: run_repeat(cfg, i, export_frames), range(cfg.repeats)))


def _run_celery(cfg, export_frames):
    from .tasks import run_repeat_task

    pending = [run_repeat_task.delay(cfg.to_dict(), i, export_frames) for i in range(cfg.repeats)]
    return [result.get() for result in pending]


def run_experiment(cfg, executor="threads", workers=None, export_frames=False):
    """
    Ejecuta cfg.repeats repeticiones (semillas seed+i) y escribe summary.json con
    los resúmenes de cada repetición y su agregado.
    """
    with stage("io"):
        cfg.outputs.mkdir(parents=True, exist_ok=True)
    logger.info(f"experiment: {cfg.repeats} repeats, seed={cfg.seed}, executor={executor}, outputs={cfg.outputs}")
    if executor == "celery":
        repeats = _run_celery(cfg, export_frames)
    elif executor == "threads":
        repeats = _run_threads(cfg, export_frames, workers)
    else:
        raise ArgumentError(f"unknown executor {executor!r}", stage="config")

    summary = {
        "config": cfg.to_dict(),
        "seeds": [r["seed"] for r in repeats],
        "repeats": repeats,
        "aggregate": summarize_repeats(repeats),
    }
    path = cfg.outputs / "summary.json"
    with stage("io"):
        doc = write_summary(path, summary)
    return ExperimentResult(summary=doc, path=path, repeats=repeats)
