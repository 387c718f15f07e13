################################################################################################################################
############################## KERNELS DENSOS: SVD TRUNCADA, PSEUDOINVERSA, SUBMATRICES ########################################
################################################################################################################################

import logging
from dataclasses import dataclass

import numpy as np

from .utils.errors import ArgumentError, NumericError
from .utils.matrices import as_dense, index_array

logger = logging.getLogger(__name__)

# Tolerancia relativa a sigma_max para la pseudoinversa
PINV_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class SvdR:
    """
    SVD compacta de rango r: u (n1×r), sigma (r, no creciente), v (n2×r).
    """
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    @property
    def rank(self):
        return self.sigma.shape[0]

    @property
    def shape(self):
        return (self.u.shape[0], self.v.shape[0])

    def reconstruct(self):
        return (self.u * self.sigma) @ self.v.T


def truncated_svd(m, r):
    """
    Los r tripletes singulares mayores de `m` (SVD completa determinista y luego truncado).

    Dentro del solver solo llegan aquí los núcleos |I|×|J|, así que la SVD
    completa es barata.
    """
    m = as_dense(m)
    if not 1 <= r <= min(m.shape):
        raise ArgumentError(f"rank {r} out of range [1, {min(m.shape)}] for shape {m.shape}")
    try:
        u, sigma, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge for shape {m.shape}") from exc
    return SvdR(
        u=np.ascontiguousarray(u[:, :r]),
        sigma=sigma[:r].copy(),
        v=np.ascontiguousarray(vt[:r].T),
    )


def rank_r_project(m, r):
    """Mejor aproximación de rango r en norma de Frobenius."""
    return truncated_svd(m, r).reconstruct()


def pinv_rank_r(f):
    """
    Pseudoinversa de Moore–Penrose a partir de una SVD (truncada).

    Los valores singulares ≤ PINV_RTOL·sigma_max se anulan, así que los núcleos
    con rango deficiente no dan error.
    """
    sigma = f.sigma
    tol = PINV_RTOL * sigma.max() if sigma.size else 0.0
    keep = sigma > tol
    inv = np.divide(1.0, sigma, out=np.zeros_like(sigma), where=keep)
    return (f.v * inv) @ f.u.T


def submatrix(m, row_idx=None, col_idx=None):
    """
    [m]_{row_idx, col_idx}; None selecciona todas las filas o columnas.

    Acepta listas de índices u objetos IndexSet.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ArgumentError("submatrix expects a 2-D matrix")
    rows = index_array(row_idx, m.shape[0], "row index")
    cols = index_array(col_idx, m.shape[1], "column index")
    return np.ascontiguousarray(m[np.ix_(rows, cols)])


def frob_inner(a, b):
    """Producto interno de Frobenius ⟨a, b⟩."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ArgumentError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.vdot(a, b))


def cur_product(c, u_pinv, r):
    # multi_dot elige el orden de asociación más barato
    return np.linalg.multi_dot([c, u_pinv, r])


def numerical_rank(sigma, rtol=1e-10):
    """Número de valores singulares por encima de rtol·sigma_max."""
    if sigma.size == 0 or sigma[0] <= 0.0:
        return 0
    return int(np.count_nonzero(sigma > rtol * sigma[0]))
