import time
from pathlib import Path

from experiments.runner import stage
from matrixio.codec import write_matrix
from matrixio.factors import write_factors
from matrixio.observations import read_observation
from matrixio.summaries import write_summary
from matrixio.traces import write_trace
from solver.rcurc import materialize, solve
from solver.structures import SolverConfig
from ._base import RcurcCommand, auto_or_float


class Command(RcurcCommand):
    help = "Ejecuta RCURC sobre una observación JSON; escribe traza, factores y resumen."

    def add_arguments(self, parser):
        parser.add_argument("--observation", required=True)
        parser.add_argument("--rank", type=int, required=True)
        parser.add_argument("--eta-r", type=auto_or_float)
        parser.add_argument("--eta-c", type=auto_or_float)
        parser.add_argument("--zeta0", type=auto_or_float)
        parser.add_argument("--gamma", type=float)
        parser.add_argument("--eps", type=float)
        parser.add_argument("--max-iters", type=int)
        parser.add_argument("--out", required=True, help="Directorio de salida")
        parser.add_argument("--no-timing", action="store_true", help="wall_ms = 0 (traza reproducible byte a byte)")
        parser.add_argument("--export-estimate", action="store_true", help="Escribe C U† R completo en estimate.rcm")
        parser.add_argument("--strict", action="store_true", help="Sale con 1 si no converge")

    def run(self, **options):
        with stage("io"):
            obs = read_observation(options["observation"])
        with stage("solve"):
            cfg = SolverConfig.from_settings(
                options["rank"],
                eta_r=options["eta_r"],
                eta_c=options["eta_c"],
                zeta0=options["zeta0"],
                gamma=options["gamma"],
                eps=options["eps"],
                max_iters=options["max_iters"],
            )
            report = solve(obs, cfg, clock=None if options["no_timing"] else time.perf_counter)

        out = Path(options["out"])
        with stage("io"):
            out.mkdir(parents=True, exist_ok=True)
            write_trace(out / "trace.csv", report)
            write_factors(out / "factors.npz", report.factors)
            if options["export_estimate"]:
                write_matrix(out / "estimate.rcm", materialize(report.factors))
            summary = write_summary(out / "summary.json", {
                "termination": str(report.termination),
                "iterations": report.iterations,
                "final_e_k": report.final_error,
                "eta_r": report.eta_r,
                "eta_c": report.eta_c,
                "zeta0": report.zeta0,
                "rank_deficient_steps": report.rank_deficient_steps,
                "sparse_nnz": report.sparse.nnz,
                "runtime_ms": report.trace[-1].wall_ms,
            })

        self.emit(summary)
        self.fail_if_not_converged(options["strict"], report.converged, "solve")
