"""
Conjuntos de índices, máscaras de observación y el contenedor de la observación CCS.

Las máscaras se guardan como arrays de coordenadas (fila, columna) ordenadas y sin
repetir; el álgebra de conjuntos trabaja sobre índices lineales fila * n2 + columna.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from core.utils.errors import ArgumentError


def _frozen(arr):
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class IndexSet:
    values: np.ndarray
    universe: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.int64).reshape(-1)
        if values.size:
            if values[0] < 0 or values[-1] >= self.universe:
                raise ArgumentError(f"indices must lie in [0, {self.universe})")
            if np.any(np.diff(values) <= 0):
                raise ArgumentError("index set must be strictly increasing")
        object.__setattr__(self, "values", _frozen(values.copy()))

    @classmethod
    def from_iterable(cls, values, universe):
        return cls(np.unique(np.asarray(list(values), dtype=np.int64)), universe)

    @classmethod
    def all(cls, universe):
        return cls(np.arange(universe, dtype=np.int64), universe)

    def __len__(self):
        return int(self.values.size)

    def __iter__(self):
        return iter(self.values.tolist())

    def __contains__(self, idx):
        pos = np.searchsorted(self.values, idx)
        return bool(pos < self.values.size and self.values[pos] == idx)

    def __eq__(self, other):
        if not isinstance(other, IndexSet):
            return NotImplemented
        return self.universe == other.universe and np.array_equal(self.values, other.values)

    __hash__ = None

    def contains(self, idx):
        """Pertenencia vectorizada."""
        idx = np.asarray(idx, dtype=np.int64)
        pos = np.clip(np.searchsorted(self.values, idx), 0, max(self.values.size - 1, 0))
        if self.values.size == 0:
            return np.zeros(idx.shape, dtype=bool)
        return self.values[pos] == idx

    def position_of(self, idx):
        """Índice global → posición dentro del panel (0..len-1)."""
        idx = np.asarray(idx, dtype=np.int64)
        if not np.all(self.contains(idx)):
            raise ArgumentError("index not in set")
        return np.searchsorted(self.values, idx)

    def tolist(self):
        return self.values.tolist()


@dataclass(frozen=True, eq=False)
class Mask:
    rows: np.ndarray
    cols: np.ndarray
    shape: tuple

    def __post_init__(self):
        n1, n2 = (int(s) for s in self.shape)
        rows = np.asarray(self.rows, dtype=np.int64).reshape(-1)
        cols = np.asarray(self.cols, dtype=np.int64).reshape(-1)
        if rows.shape != cols.shape:
            raise ArgumentError("mask rows and cols must have the same length")
        if rows.size and (rows.min() < 0 or rows.max() >= n1 or cols.min() < 0 or cols.max() >= n2):
            raise ArgumentError(f"mask entry outside shape {(n1, n2)}")
        linear = rows * n2 + cols
        order = np.argsort(linear, kind="stable")
        linear = linear[order]
        if np.any(np.diff(linear) == 0):
            raise ArgumentError("mask contains duplicate entries")
        object.__setattr__(self, "shape", (n1, n2))
        object.__setattr__(self, "rows", _frozen(rows[order]))
        object.__setattr__(self, "cols", _frozen(cols[order]))

    @classmethod
    def from_pairs(cls, pairs, shape):
        arr = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1], tuple(shape))

    @classmethod
    def from_linear(cls, linear, shape):
        linear = np.asarray(linear, dtype=np.int64)
        return cls(linear // shape[1], linear % shape[1], tuple(shape))

    @classmethod
    def empty(cls, shape):
        return cls(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64), tuple(shape))

    @cached_property
    def linear(self):
        return _frozen(self.rows * self.shape[1] + self.cols)

    def __len__(self):
        return int(self.rows.size)

    def __eq__(self, other):
        if not isinstance(other, Mask):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.linear, other.linear)

    __hash__ = None

    def _check_shape(self, other):
        if self.shape != other.shape:
            raise ArgumentError(f"mask shapes differ: {self.shape} vs {other.shape}")

    def intersection(self, other):
        self._check_shape(other)
        return Mask.from_linear(np.intersect1d(self.linear, other.linear, assume_unique=True), self.shape)

    def union(self, other):
        self._check_shape(other)
        return Mask.from_linear(np.union1d(self.linear, other.linear), self.shape)

    def difference(self, other):
        self._check_shape(other)
        return Mask.from_linear(np.setdiff1d(self.linear, other.linear, assume_unique=True), self.shape)

    def contains(self, rows, cols):
        """Pertenencia vectorizada de (rows[k], cols[k])."""
        wanted = np.asarray(rows, dtype=np.int64) * self.shape[1] + np.asarray(cols, dtype=np.int64)
        return np.isin(wanted, self.linear, assume_unique=False)

    def to_pairs(self):
        return list(zip(self.rows.tolist(), self.cols.tolist()))

    def to_bool(self):
        out = np.zeros(self.shape, dtype=bool)
        out[self.rows, self.cols] = True
        return out


@dataclass(frozen=True)
class Panel:
    """
    Vista densa de un panel observado.

    values: Y en las entradas observadas del panel (Ω_R ∪ Ω_C), 0 fuera.
    own: máscara propia del panel (Ω_R para filas, Ω_C para columnas).
    other: entradas de la otra máscara que caen dentro del panel.
    """
    values: np.ndarray
    own: np.ndarray
    other: np.ndarray

    @property
    def observed(self):
        return self.own | self.other


@dataclass(frozen=True, eq=False)
class CcsObservation:
    """
    Salida del muestreo CCS: [Y] sobre Ω_R ∪ Ω_C, las máscaras y los índices I, J.

    values_r y values_c están alineados con el orden (ordenado) de omega_r y
    omega_c; en el solape ambos guardan el mismo valor.
    """
    shape: tuple
    row_idx: IndexSet
    col_idx: IndexSet
    omega_r: Mask
    omega_c: Mask
    values_r: np.ndarray
    values_c: np.ndarray

    def __post_init__(self):
        n1, n2 = (int(s) for s in self.shape)
        object.__setattr__(self, "shape", (n1, n2))
        if self.row_idx.universe != n1 or self.col_idx.universe != n2:
            raise ArgumentError("index set universes must match the matrix shape")
        if self.omega_r.shape != (n1, n2) or self.omega_c.shape != (n1, n2):
            raise ArgumentError("mask shapes must match the matrix shape")
        if not np.all(self.row_idx.contains(self.omega_r.rows)):
            raise ArgumentError("omega_r entry outside the selected rows I")
        if not np.all(self.col_idx.contains(self.omega_c.cols)):
            raise ArgumentError("omega_c entry outside the selected columns J")
        values_r = np.asarray(self.values_r, dtype=np.float64).reshape(-1)
        values_c = np.asarray(self.values_c, dtype=np.float64).reshape(-1)
        if values_r.size != len(self.omega_r) or values_c.size != len(self.omega_c):
            raise ArgumentError("observed values must align with their masks")
        if not (np.isfinite(values_r).all() and np.isfinite(values_c).all()):
            raise ArgumentError("observed values must be finite")
        _, ir, ic = np.intersect1d(self.omega_r.linear, self.omega_c.linear, assume_unique=True, return_indices=True)
        if not np.array_equal(values_r[ir], values_c[ic]):
            raise ArgumentError("overlapping entries disagree between omega_r and omega_c")
        object.__setattr__(self, "values_r", _frozen(values_r.copy()))
        object.__setattr__(self, "values_c", _frozen(values_c.copy()))

    @classmethod
    def from_value_map(cls, shape, row_idx, col_idx, omega_r, omega_c, values):
        """Construye desde las máscaras y un mapa (fila, columna) → valor definido justo sobre la unión."""
        union = omega_r.union(omega_c)
        if set(values) != set(union.to_pairs()):
            raise ArgumentError("values must be defined exactly on omega_r ∪ omega_c")
        return cls(
            shape=tuple(shape),
            row_idx=row_idx,
            col_idx=col_idx,
            omega_r=omega_r,
            omega_c=omega_c,
            values_r=[values[p] for p in omega_r.to_pairs()],
            values_c=[values[p] for p in omega_c.to_pairs()],
        )

    def union_mask(self):
        return self.omega_r.union(self.omega_c)

    def values_map(self):
        out = dict(zip(self.omega_c.to_pairs(), self.values_c.tolist()))
        out.update(zip(self.omega_r.to_pairs(), self.values_r.tolist()))
        return out

    def max_abs_value(self):
        parts = [np.abs(self.values_r), np.abs(self.values_c)]
        return float(max((p.max() for p in parts if p.size), default=0.0))

    @cached_property
    def _panels(self):
        n1, n2 = self.shape
        I, J = self.row_idx, self.col_idx
        rp = np.searchsorted(I.values, self.omega_r.rows)
        cp = np.searchsorted(J.values, self.omega_c.cols)

        row_vals = np.zeros((len(I), n2))
        row_own = np.zeros((len(I), n2), dtype=bool)
        row_other = np.zeros((len(I), n2), dtype=bool)
        col_vals = np.zeros((n1, len(J)))
        col_own = np.zeros((n1, len(J)), dtype=bool)
        col_other = np.zeros((n1, len(J)), dtype=bool)

        row_vals[rp, self.omega_r.cols] = self.values_r
        row_own[rp, self.omega_r.cols] = True
        col_vals[self.omega_c.rows, cp] = self.values_c
        col_own[self.omega_c.rows, cp] = True

        # Ω_C dentro de las filas I y Ω_R dentro de las columnas J (bloque I×J)
        c_in_rows = I.contains(self.omega_c.rows)
        row_pos = np.searchsorted(I.values, self.omega_c.rows[c_in_rows])
        row_vals[row_pos, self.omega_c.cols[c_in_rows]] = self.values_c[c_in_rows]
        row_other[row_pos, self.omega_c.cols[c_in_rows]] = True
        r_in_cols = J.contains(self.omega_r.cols)
        col_pos = np.searchsorted(J.values, self.omega_r.cols[r_in_cols])
        col_vals[self.omega_r.rows[r_in_cols], col_pos] = self.values_r[r_in_cols]
        col_other[self.omega_r.rows[r_in_cols], col_pos] = True

        for arr in (row_vals, row_own, row_other, col_vals, col_own, col_other):
            _frozen(arr)
        return Panel(row_vals, row_own, row_other), Panel(col_vals, col_own, col_other)

    def row_panel(self):
        """Panel |I|×n2 de Y con Ω_R como máscara propia."""
        return self._panels[0]

    def col_panel(self):
        """Panel n1×|J| de Y con Ω_C como máscara propia."""
        return self._panels[1]

    def __eq__(self, other):
        if not isinstance(other, CcsObservation):
            return NotImplemented
        return (
            self.shape == other.shape
            and self.row_idx == other.row_idx
            and self.col_idx == other.col_idx
            and self.omega_r == other.omega_r
            and self.omega_c == other.omega_c
            and np.array_equal(self.values_r, other.values_r)
            and np.array_equal(self.values_c, other.values_c)
        )

    __hash__ = None
