from pathlib import Path

import numpy as np

from experiments.runner import stage
from matrixio.codec import write_matrix, write_matrix_csv
from problems.checks import sparsity_alpha
from problems.generators import make_synthetic_problem
from problems.video import make_video_surrogate
from ._base import RcurcCommand


class Command(RcurcCommand):
    help = "Genera un problema Y = X + S (sintético o vídeo) y lo guarda en --out."

    def add_arguments(self, parser):
        parser.add_argument("--kind", choices=["synthetic", "video"], default="synthetic")
        parser.add_argument("--n1", type=int, default=500)
        parser.add_argument("--n2", type=int, default=500)
        parser.add_argument("--rank", type=int, default=5)
        parser.add_argument("--alpha", type=float, default=0.1)
        parser.add_argument("--amp", type=float, default=10.0)
        parser.add_argument("--height", type=int, default=40)
        parser.add_argument("--width", type=int, default=30)
        parser.add_argument("--frames", type=int, default=100)
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--out", required=True, help="Directorio de salida")
        parser.add_argument("--csv", action="store_true", help="Además de .rcm, escribe copias CSV")

    def run(self, **options):
        rng = np.random.default_rng(options["seed"])
        with stage("problem"):
            if options["kind"] == "video":
                problem = make_video_surrogate(
                    options["height"], options["width"], options["frames"], options["alpha"], rng,
                )
            else:
                problem = make_synthetic_problem(
                    options["n1"], options["n2"], options["rank"], options["alpha"], options["amp"], rng,
                )

        out = Path(options["out"])
        with stage("io"):
            out.mkdir(parents=True, exist_ok=True)
            for name, m in (("y", problem.y), ("x_true", problem.x_true), ("s_true", problem.s_true)):
                write_matrix(out / f"{name}.rcm", m)
                if options["csv"]:
                    write_matrix_csv(out / f"{name}.csv", m)

        self.emit({
            "kind": options["kind"],
            "shape": list(problem.y.shape),
            "rank": problem.rank,
            "alpha": sparsity_alpha(problem.s_true),
            "seed": options["seed"],
            "out": str(out),
        })
