from experiments.runner import load_config, run_experiment
from ._base import RcurcCommand, auto_or_float, unit_interval

# opción de línea de comandos → clave del config
OVERRIDES = {
    "seed": "seed",
    "repeats": "repeats",
    "out": "outputs",
    "kind": "problem.kind",
    "n1": "problem.n1",
    "n2": "problem.n2",
    "alpha": "problem.alpha",
    "amp": "problem.amp",
    "peak": "problem.peak",
    "row_frac": "sampling.row_frac",
    "col_frac": "sampling.col_frac",
    "p_row": "sampling.p_row",
    "p_col": "sampling.p_col",
    "rank": "solver.rank",
    "eta_r": "solver.eta_r",
    "eta_c": "solver.eta_c",
    "zeta0": "solver.zeta0",
    "gamma": "solver.gamma",
    "eps": "solver.eps",
    "max_iters": "solver.max_iters",
}


class Command(RcurcCommand):
    help = "Pipeline completo (problema → muestreo → RCURC → métricas) desde un config YAML/JSON."

    def add_arguments(self, parser):
        parser.add_argument("--config", help="Config YAML o JSON")
        parser.add_argument("--seed", type=int)
        parser.add_argument("--repeats", type=int)
        parser.add_argument("--out")
        parser.add_argument("--kind", choices=["synthetic", "video", "frames", "matrix", "observation"])
        parser.add_argument("--n1", type=int)
        parser.add_argument("--n2", type=int)
        parser.add_argument("--rank", type=int)
        parser.add_argument("--alpha", type=float)
        parser.add_argument("--amp", type=float)
        parser.add_argument("--peak", type=auto_or_float)
        parser.add_argument("--row-frac", type=unit_interval)
        parser.add_argument("--col-frac", type=unit_interval)
        parser.add_argument("--p-row", type=unit_interval)
        parser.add_argument("--p-col", type=unit_interval)
        parser.add_argument("--eta-r", type=auto_or_float)
        parser.add_argument("--eta-c", type=auto_or_float)
        parser.add_argument("--zeta0", type=auto_or_float)
        parser.add_argument("--gamma", type=float)
        parser.add_argument("--eps", type=float)
        parser.add_argument("--max-iters", type=int)
        parser.add_argument("--no-timing", action="store_true", help="wall_ms = 0 (salidas reproducibles byte a byte)")
        parser.add_argument("--export-frames", action="store_true", help="Escribe el fondo recuperado como PGM")
        parser.add_argument("--executor", choices=["threads", "celery"], default="threads")
        parser.add_argument("--workers", type=int, help="Hilos para --repeats (por defecto RCURC_WORKERS)")
        parser.add_argument("--strict", action="store_true", help="Sale con 1 si alguna repetición no converge")

    def run(self, **options):
        overrides = {key: options.get(option) for option, key in OVERRIDES.items()}
        # --rank fija a la vez el rango del generador y el del solver
        overrides["problem.rank"] = options["rank"]
        if options["no_timing"]:
            overrides["timing"] = False
        cfg = load_config(options["config"], overrides)
        result = run_experiment(
            cfg,
            executor=options["executor"],
            workers=options["workers"],
            export_frames=options["export_frames"],
        )
        aggregate = result.summary["aggregate"]
        self.emit({
            "summary": str(result.path),
            "repeats": aggregate["repeats"],
            "terminations": aggregate["terminations"],
        })
        self.fail_if_not_converged(options["strict"], result.all_converged, "run")
