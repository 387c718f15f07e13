import numpy as np
import numpy.typing as npt

from .errors import ArgumentError

# Contenedor numérico universal: ndarray 2-D float64, row-major
DenseMatrix = npt.NDArray[np.float64]


def as_dense(m, name="matrix"):
    """
    Valida y convierte a DenseMatrix (2-D, float64, C-contiguo, valores finitos).

    :raises ArgumentError: si no es 2-D o contiene NaN/Inf.
    """
    arr = np.ascontiguousarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise ArgumentError(f"{name} must be 2-D, got {arr.ndim}-D")
    if not np.isfinite(arr).all():
        raise ArgumentError(f"{name} contains non-finite values")
    return arr


def index_array(idx, universe, name="index"):
    """Convierte una lista de índices (o None = todos) a int64 validando el rango."""
    if idx is None:
        return np.arange(universe, dtype=np.int64)
    values = getattr(idx, "values", idx)
    arr = np.asarray(values, dtype=np.int64).reshape(-1)
    if arr.size and (arr.min() < 0 or arr.max() >= universe):
        raise ArgumentError(f"{name} out of range [0, {universe})")
    return arr
