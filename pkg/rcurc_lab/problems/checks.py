from typing import NamedTuple

import numpy as np

from core.linalg import cur_product, numerical_rank, pinv_rank_r, submatrix, truncated_svd
from core.utils.matrices import as_dense

# Umbral de éxito del chequeo CUR exacto
CUR_EXACT_TOL = 1e-8


class CurCheck(NamedTuple):
    ok: bool
    rel_err: float


def rank_of(m, rtol=1e-10):
    """Rango numérico: valores singulares por encima de rtol·sigma_max."""
    m = np.asarray(m, dtype=np.float64)
    if m.size == 0:
        return 0
    return numerical_rank(np.linalg.svd(m, compute_uv=False), rtol)


def incoherence_mu(x, r):
    """
    Menor μ con ‖U‖²_{2,∞} ≤ μr/n1 y ‖V‖²_{2,∞} ≤ μr/n2.
    """
    x = as_dense(x)
    n1, n2 = x.shape
    f = truncated_svd(x, r)
    u_rows = np.max(np.sum(f.u ** 2, axis=1))
    v_rows = np.max(np.sum(f.v ** 2, axis=1))
    return float(max(n1 / r * u_rows, n2 / r * v_rows))


def sparsity_alpha(s):
    """Menor α con como mucho α·n2 no nulos por fila y α·n1 por columna."""
    s = np.asarray(s)
    n1, n2 = s.shape
    nz = s != 0
    return float(max(nz.sum(axis=1).max() / n2, nz.sum(axis=0).max() / n1))


def cur_exact_check(x, row_idx, col_idx):
    """
    Comprueba X = C U† R con C = [X]_{:,J}, U = [X]_{I,J}, R = [X]_{I,:}.

    rel_err es relativo a ‖X‖_F, o absoluto cuando X = 0.
    """
    x = as_dense(x)
    c = submatrix(x, None, col_idx)
    u = submatrix(x, row_idx, col_idx)
    r = submatrix(x, row_idx, None)
    u_pinv = pinv_rank_r(truncated_svd(u, min(u.shape)))
    err = float(np.linalg.norm(x - cur_product(c, u_pinv, r)))
    norm = float(np.linalg.norm(x))
    rel_err = err / norm if norm > 0 else err
    return CurCheck(ok=rel_err <= CUR_EXACT_TOL, rel_err=rel_err)
