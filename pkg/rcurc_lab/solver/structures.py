"""
Estado y resultados del solver RCURC.

Ninguna de estas estructuras guarda una matriz n1×n2: el bajo rango vive como
factores CUR (C, U, R) y la parte dispersa como dos paneles (filas I y
columnas J).
"""

import enum
from dataclasses import asdict, dataclass, field, replace
from typing import NamedTuple

import numpy as np

from core.linalg import SvdR, truncated_svd
from core.utils.errors import ArgumentError
from core.utils.matrices import as_dense
from sampling.masks import IndexSet, Mask

AUTO = "auto"


def _auto_or_positive(name, value, allow_zero=False):
    if value == AUTO:
        return value
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ArgumentError(f"{name} must be a number or 'auto', got {value!r}")
    if not np.isfinite(value) or value < 0 or (value == 0 and not allow_zero):
        raise ArgumentError(f"{name} out of range: {value}")
    return value


@dataclass(frozen=True)
class SolverConfig:
    """
    Parámetros de RCURC.

    :param rank: rango objetivo r.
    :param eta_r: paso del panel de filas, o "auto" (1/p_R).
    :param eta_c: paso del panel de columnas, o "auto" (1/p_C).
    :param zeta0: umbral inicial, o "auto" (máximo |y| observado).
    :param gamma: decaimiento del umbral, en (0, 1).
    :param eps: precisión objetivo sobre e_k.
    :param max_iters: tope de iteraciones.
    :param stagnation_window: iteraciones seguidas sin mejora antes de parar.
    :param stagnation_tol: mejora relativa mínima de e_k que cuenta como progreso.
    """
    rank: int
    eta_r: object = AUTO
    eta_c: object = AUTO
    zeta0: object = AUTO
    gamma: float = 0.65
    eps: float = 1e-4
    max_iters: int = 500
    stagnation_window: int = 10
    stagnation_tol: float = 1e-12

    def __post_init__(self):
        if int(self.rank) != self.rank or self.rank < 1:
            raise ArgumentError(f"rank must be a positive integer, got {self.rank}")
        if not 0.0 < self.gamma < 1.0:
            raise ArgumentError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not self.eps > 0:
            raise ArgumentError(f"eps must be positive, got {self.eps}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ArgumentError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.stagnation_window < 1 or self.stagnation_tol < 0:
            raise ArgumentError("stagnation guard needs window >= 1 and tol >= 0")
        object.__setattr__(self, "rank", int(self.rank))
        object.__setattr__(self, "max_iters", int(self.max_iters))
        object.__setattr__(self, "eta_r", _auto_or_positive("eta_r", self.eta_r))
        object.__setattr__(self, "eta_c", _auto_or_positive("eta_c", self.eta_c))
        object.__setattr__(self, "zeta0", _auto_or_positive("zeta0", self.zeta0, allow_zero=True))

    @classmethod
    def from_settings(cls, rank, **overrides):
        """Valores por defecto de settings.RCURC_SOLVER_DEFAULTS; los overrides a None se ignoran."""
        from django.conf import settings

        values = dict(settings.RCURC_SOLVER_DEFAULTS)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(rank=rank, **values)

    @property
    def is_resolved(self):
        return AUTO not in (self.eta_r, self.eta_c, self.zeta0)

    def resolved(self, obs):
        """Sustituye los "auto" usando las tasas observadas y los valores de obs."""
        if self.is_resolved:
            return self
        # import local: sampling.ccs no depende del solver
        from sampling.ccs import observation_rates

        p_r, p_c = observation_rates(obs)
        changes = {}
        for name, p in (("eta_r", p_r), ("eta_c", p_c)):
            if getattr(self, name) == AUTO:
                if p <= 0:
                    raise ArgumentError(f"{name}='auto' needs a nonempty panel mask")
                changes[name] = 1.0 / p
        if self.zeta0 == AUTO:
            changes["zeta0"] = obs.max_abs_value()
        return replace(self, **changes)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True, eq=False)
class CurFactors:
    """
    Factores CUR de X_k = C U† R.

    c: n1×|J|, u: SVD de rango r del núcleo |I|×|J|, r_mat: |I|×n2.
    Tras cada paso [c]_{I,:} y [r_mat]_{:,J} son copias exactas de u reconstruido.
    """
    c: np.ndarray
    u: SvdR
    r_mat: np.ndarray
    row_idx: IndexSet
    col_idx: IndexSet
    rank: int

    def __post_init__(self):
        n_i, n_j = len(self.row_idx), len(self.col_idx)
        n1, n2 = self.row_idx.universe, self.col_idx.universe
        if self.c.shape != (n1, n_j):
            raise ArgumentError(f"C must be {n1}x{n_j}, got {self.c.shape}")
        if self.r_mat.shape != (n_i, n2):
            raise ArgumentError(f"R must be {n_i}x{n2}, got {self.r_mat.shape}")
        if self.u.shape != (n_i, n_j) or self.u.rank > self.rank:
            raise ArgumentError("core SVD does not match the index sets or the rank")

    @property
    def shape(self):
        return (self.row_idx.universe, self.col_idx.universe)

    @classmethod
    def zeros(cls, obs, rank):
        """X_0 = 0."""
        n1, n2 = obs.shape
        n_i, n_j = len(obs.row_idx), len(obs.col_idx)
        core = SvdR(u=np.zeros((n_i, rank)), sigma=np.zeros(rank), v=np.zeros((n_j, rank)))
        return cls(
            c=np.zeros((n1, n_j)),
            u=core,
            r_mat=np.zeros((n_i, n2)),
            row_idx=obs.row_idx,
            col_idx=obs.col_idx,
            rank=rank,
        )

    @classmethod
    def from_dense(cls, x, row_idx, col_idx, rank):
        """Factores exactos C=[X]_{:,J}, U=𝒟_r([X]_{I,J}), R=[X]_{I,:}."""
        x = as_dense(x, "x")
        c = np.ascontiguousarray(x[:, col_idx.values])
        r_mat = np.ascontiguousarray(x[row_idx.values, :])
        core = truncated_svd(x[np.ix_(row_idx.values, col_idx.values)], rank)
        return cls(c=c, u=core, r_mat=r_mat, row_idx=row_idx, col_idx=col_idx, rank=rank)


@dataclass(frozen=True, eq=False)
class SparseCross:
    """
    S restringida a la cruz (filas I) ∪ (columnas J).

    rows: |I|×n2 y cols: n1×|J|; el bloque I×J está en ambos paneles con
    el mismo valor.
    """
    rows: np.ndarray
    cols: np.ndarray
    row_idx: IndexSet
    col_idx: IndexSet

    @property
    def shape(self):
        return (self.row_idx.universe, self.col_idx.universe)

    @classmethod
    def zeros(cls, obs):
        n1, n2 = obs.shape
        return cls(
            rows=np.zeros((len(obs.row_idx), n2)),
            cols=np.zeros((n1, len(obs.col_idx))),
            row_idx=obs.row_idx,
            col_idx=obs.col_idx,
        )

    def _coordinates(self):
        # el bloque I×J se toma del panel de filas; del de columnas solo las filas fuera de I
        pi, cols = np.nonzero(self.rows)
        rows_out, pj = np.nonzero(self.cols)
        outside = ~self.row_idx.contains(rows_out)
        rows_out, pj = rows_out[outside], pj[outside]
        rows = np.concatenate([self.row_idx.values[pi], rows_out])
        cols = np.concatenate([cols, self.col_idx.values[pj]])
        values = np.concatenate([self.rows[pi, cols[: pi.size]], self.cols[rows_out, pj]])
        return rows, cols, values

    def support(self):
        rows, cols, _ = self._coordinates()
        return Mask(rows, cols, self.shape)

    def entries(self):
        """(row, col) → valor para cada entrada no nula."""
        rows, cols, values = self._coordinates()
        return dict(zip(zip(rows.tolist(), cols.tolist()), values.tolist()))

    @property
    def nnz(self):
        return len(self.support())


class TraceEntry(NamedTuple):
    iter: int
    e_k: float
    zeta_k: float
    wall_ms: float


class Termination(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    STAGNATED = "stagnated"

    def __str__(self):
        return self.value


@dataclass(eq=False)
class SolveReport:
    trace: list
    termination: Termination
    factors: CurFactors
    sparse: SparseCross
    eta_r: float
    eta_c: float
    zeta0: float
    rank_deficient_steps: int = 0
    config: SolverConfig = field(default=None, repr=False)

    @property
    def iterations(self):
        return len(self.trace)

    @property
    def final_error(self):
        return self.trace[-1].e_k if self.trace else float("nan")

    @property
    def converged(self):
        return self.termination is Termination.CONVERGED
