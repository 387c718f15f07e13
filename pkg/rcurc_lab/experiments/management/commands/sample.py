from pathlib import Path

import numpy as np

from experiments.runner import stage
from matrixio.codec import load_any
from matrixio.observations import write_observation
from sampling.ccs import ccs_sample, observation_rates, overlap
from ._base import RcurcCommand, unit_interval


class Command(RcurcCommand):
    help = "Muestreo CCS de una matriz (.rcm o .csv); escribe la observación en JSON."

    def add_arguments(self, parser):
        parser.add_argument("--matrix", required=True)
        parser.add_argument("--row-frac", type=unit_interval, default=0.3)
        parser.add_argument("--col-frac", type=unit_interval, default=0.3)
        parser.add_argument("--p-row", type=unit_interval, default=0.25)
        parser.add_argument("--p-col", type=unit_interval, default=0.25)
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--out", required=True, help="Fichero JSON de salida")

    def run(self, **options):
        with stage("io"):
            y = load_any(options["matrix"])
        rng = np.random.default_rng(options["seed"])
        with stage("sample"):
            obs = ccs_sample(y, options["row_frac"], options["col_frac"], options["p_row"], options["p_col"], rng)
        out = Path(options["out"])
        with stage("io"):
            out.parent.mkdir(parents=True, exist_ok=True)
            write_observation(out, obs)
        p_r, p_c = observation_rates(obs)
        self.emit({
            "shape": list(obs.shape),
            "rows": len(obs.row_idx),
            "cols": len(obs.col_idx),
            "omega_r": len(obs.omega_r),
            "omega_c": len(obs.omega_c),
            "overlap": len(overlap(obs)),
            "p_r": p_r,
            "p_c": p_c,
            "out": str(out),
        })
