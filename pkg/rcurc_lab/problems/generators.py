import logging
import math
from dataclasses import dataclass

import numpy as np

from core.utils.errors import ArgumentError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SyntheticProblem:
    """Y = X + S con X de rango r y S α-dispersa."""
    x_true: np.ndarray
    s_true: np.ndarray
    y: np.ndarray
    rank: int
    alpha: float
    amp: float


def gen_low_rank(n1, n2, r, rng):
    """X = W Vᵀ con W (n1×r) y V (n2×r) normales estándar."""
    if not 1 <= r <= min(n1, n2):
        raise ArgumentError(f"rank {r} out of range [1, {min(n1, n2)}]")
    w = rng.standard_normal((n1, r))
    v = rng.standard_normal((n2, r))
    return w @ v.T


def _column_cap(n1, n2, alpha, per_row):
    """
    Tope de outliers por columna: ⌊α·n1⌋ si cabe la cuota de todas las filas
    (n2·⌊α·n1⌋ ≥ n1·⌊α·n2⌋), si no ⌈α·n1⌉, que siempre cabe.
    """
    cap = int(math.floor(round(alpha * n1, 9)))
    if n2 * cap >= n1 * per_row:
        return cap
    return int(math.ceil(round(alpha * n1, 9)))


def _outlier_support(n1, n2, per_row, col_cap, rng):
    """
    Soporte con exactamente `per_row` columnas por fila y como mucho
    `col_cap` filas por columna.

    Las filas se visitan en orden aleatorio y cada una elige sus columnas al
    azar entre las que tienen hueco. Con m filas pendientes (contando la
    actual) y hueco h_j, el resto sigue siendo asignable mientras
    Σ_j min(h_j, m−1) ≥ (m−1)·per_row; si la elección la incumple, las
    columnas de hueco < m sobrantes se cambian por columnas de hueco ≥ m.
    """
    support = np.zeros((n1, n2), dtype=bool)
    room = np.full(n2, col_cap, dtype=np.int64)
    for left, i in zip(range(n1, 0, -1), rng.permutation(n1)):
        cols = rng.choice(np.flatnonzero(room > 0), size=per_row, replace=False)
        wide = room >= left
        # columnas estrechas que aún se pueden gastar en esta fila
        budget = int(wide.sum()) * (left - 1) + int(room[~wide].sum()) - (left - 1) * per_row
        narrow = cols[~wide[cols]]
        excess = narrow.size - budget
        if excess > 0:
            spare = np.setdiff1d(np.flatnonzero(wide), cols)
            drop = rng.choice(narrow, size=excess, replace=False)
            cols = np.concatenate([np.setdiff1d(cols, drop), rng.choice(spare, size=excess, replace=False)])
        room[cols] -= 1
        support[i, cols] = True
    return support


def gen_sparse_outliers(x, alpha, c, rng):
    """
    Outliers α-dispersos con amplitud c·mean|x|.

    Cada fila recibe exactamente ⌊α·n2⌋ columnas distintas y ninguna columna pasa
    del tope de `_column_cap`. Los valores son i.i.d. uniformes en [−c·m̄, c·m̄].
    """
    if not 0.0 <= alpha < 0.5:
        raise ArgumentError(f"alpha must lie in [0, 0.5), got {alpha}")
    if c <= 0:
        raise ArgumentError(f"amplification c must be positive, got {c}")
    x = np.asarray(x, dtype=np.float64)
    n1, n2 = x.shape
    s = np.zeros((n1, n2))
    per_row = int(math.floor(round(alpha * n2, 9)))
    if per_row == 0:
        return s

    col_cap = _column_cap(n1, n2, alpha, per_row)
    if col_cap > int(math.floor(round(alpha * n1, 9))):
        logger.info(f"column cap raised to {col_cap} so every row holds {per_row} outliers in {n1}x{n2}")
    support = _outlier_support(n1, n2, per_row, col_cap, rng)
    bound = c * float(np.mean(np.abs(x)))
    s[support] = rng.uniform(-bound, bound, size=int(support.sum()))
    return s


def make_synthetic_problem(n1, n2, r, alpha, c, rng):
    x = gen_low_rank(n1, n2, r, rng)
    s = gen_sparse_outliers(x, alpha, c, rng)
    logger.info(f"synthetic problem {n1}x{n2} rank={r} alpha={alpha} c={c}")
    return SyntheticProblem(x_true=x, s_true=s, y=x + s, rank=r, alpha=alpha, amp=c)
