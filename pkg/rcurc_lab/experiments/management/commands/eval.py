from experiments.runner import stage
from matrixio.codec import load_any
from matrixio.factors import read_factors
from matrixio.traces import read_trace
from metrics.measures import fit_linear_rate, psnr, recovery_error
from solver.rcurc import materialize
from ._base import RcurcCommand, auto_or_float


class Command(RcurcCommand):
    help = "Métricas entre ficheros: error de recuperación, PSNR y ajuste de la tasa lineal de una traza."

    def add_arguments(self, parser):
        source = parser.add_mutually_exclusive_group()
        source.add_argument("--estimate", help="Matriz estimada (.rcm o .csv)")
        source.add_argument("--factors", help="Factores CUR (.npz) de `solve`")
        parser.add_argument("--truth", help="Matriz de referencia para el error relativo")
        parser.add_argument("--reference", help="Matriz de referencia para el PSNR")
        parser.add_argument("--peak", type=auto_or_float, default="auto")
        parser.add_argument("--trace", help="Traza CSV para fit_linear_rate")

    def run(self, **options):
        result = {}
        estimate = None
        with stage("io"):
            if options["estimate"]:
                estimate = load_any(options["estimate"])
            elif options["factors"]:
                estimate = materialize(read_factors(options["factors"]))
            truth = load_any(options["truth"]) if options["truth"] else None
            reference = load_any(options["reference"]) if options["reference"] else None
            trace = read_trace(options["trace"]) if options["trace"] else None

        with stage("metrics"):
            if estimate is not None and truth is not None:
                result["recovery_error"] = recovery_error(estimate, truth)
            if estimate is not None and reference is not None:
                result["psnr_db"] = psnr(reference, estimate, options["peak"])
            if trace is not None:
                rows, termination = trace
                fit = fit_linear_rate(rows)
                result.update({
                    "rate_slope": fit.slope,
                    "rate_r2": fit.r2,
                    "rate_iters": fit.iters_used,
                    "termination": termination,
                })
        if not result:
            self.stderr.write("nothing to evaluate: pass --estimate/--factors with --truth/--reference, or --trace")
        self.emit(result)
