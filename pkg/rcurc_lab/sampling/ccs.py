################################################################################################################################
############################## MUESTREO CROSS-CONCENTRATED (CCS) ###############################################################
################################################################################################################################

import logging
import math

import numpy as np

from core.utils.errors import ArgumentError
from core.utils.matrices import as_dense
from .masks import CcsObservation, IndexSet, Mask

logger = logging.getLogger(__name__)


def _count(x):
    # ceil robusto frente a 0.3*100 = 30.000000000000004
    return int(math.ceil(round(x, 9)))


def _check_rate(name, value):
    if not 0.0 < value <= 1.0:
        raise ArgumentError(f"{name} must lie in (0, 1], got {value}")


def draw_distinct(population, target, rng):
    """
    Extracciones uniformes con reemplazo de range(population) hasta que aparecen
    `target` valores distintos. Los devuelve en orden de primera aparición.
    """
    if not 0 <= target <= population:
        raise ArgumentError(f"cannot draw {target} distinct values from {population}")
    seen = np.zeros(population, dtype=bool)
    picked = []
    remaining = target
    while remaining > 0:
        # lote del tamaño esperado para obtener `remaining` valores nuevos
        unseen = population - (target - remaining)
        batch = int(math.ceil(remaining * population / unseen)) + 16
        draws = rng.integers(0, population, size=batch)
        _, first = np.unique(draws, return_index=True)
        fresh = draws[np.sort(first)]
        fresh = fresh[~seen[fresh]][:remaining]
        seen[fresh] = True
        picked.append(fresh)
        remaining -= fresh.size
    if not picked:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(picked).astype(np.int64)


def sample_unique_indices(universe, target, rng):
    """`target` índices distintos de [0, universe), extraídos uniformemente con reemplazo."""
    if not 0 < target <= universe:
        raise ArgumentError(f"target must lie in (0, {universe}], got {target}")
    return IndexSet(np.sort(draw_distinct(universe, target, rng)), universe)


def ccs_sample(y, row_frac, col_frac, p_row, p_col, rng):
    """
    Muestreo cross-concentrated de `y`.

    El generador se consume en orden fijo: I, luego J, luego Ω_R y por último Ω_C.
    row_frac = col_frac = 1 es muestreo uniforme de entradas; p_row = p_col = 1 es
    muestreo CUR de filas y columnas completas.
    """
    y = as_dense(y, "y")
    n1, n2 = y.shape
    if n1 == 0 or n2 == 0:
        raise ArgumentError(f"degenerate shape {y.shape}")
    for name, value in (("row_frac", row_frac), ("col_frac", col_frac), ("p_row", p_row), ("p_col", p_col)):
        _check_rate(name, value)

    I = sample_unique_indices(n1, max(1, _count(row_frac * n1)), rng)
    J = sample_unique_indices(n2, max(1, _count(col_frac * n2)), rng)

    size_r = _count(p_row * len(I) * n2)
    lin_r = draw_distinct(len(I) * n2, size_r, rng)
    omega_r = Mask(I.values[lin_r // n2], lin_r % n2, (n1, n2))

    size_c = _count(p_col * len(J) * n1)
    lin_c = draw_distinct(n1 * len(J), size_c, rng)
    omega_c = Mask(lin_c // len(J), J.values[lin_c % len(J)], (n1, n2))

    obs = CcsObservation(
        shape=(n1, n2),
        row_idx=I,
        col_idx=J,
        omega_r=omega_r,
        omega_c=omega_c,
        values_r=y[omega_r.rows, omega_r.cols],
        values_c=y[omega_c.rows, omega_c.cols],
    )
    logger.info(f"CCS sample: |I|={len(I)} |J|={len(J)} |Ω_R|={len(omega_r)} |Ω_C|={len(omega_c)} of {n1}x{n2}")
    return obs


def observation_rates(obs):
    """Tasas de observación empíricas (p_R, p_C) de los dos paneles."""
    n1, n2 = obs.shape
    p_r = len(obs.omega_r) / (len(obs.row_idx) * n2) if len(obs.row_idx) else 0.0
    p_c = len(obs.omega_c) / (len(obs.col_idx) * n1) if len(obs.col_idx) else 0.0
    return p_r, p_c


def overlap(obs):
    """Ω_R ∩ Ω_C; siempre dentro del bloque I×J."""
    return obs.omega_r.intersection(obs.omega_c)
