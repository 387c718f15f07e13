import json
import logging

import numpy as np

from core.utils.errors import ArgumentError, FormatError
from sampling.masks import CcsObservation, IndexSet, Mask
from .serializers import ObservationFileSerializer

logger = logging.getLogger(__name__)

SCHEMA = 1


def observation_to_dict(obs):
    union = obs.union_mask()
    lookup = np.empty(len(union))
    lookup[np.searchsorted(union.linear, obs.omega_c.linear)] = obs.values_c
    lookup[np.searchsorted(union.linear, obs.omega_r.linear)] = obs.values_r
    return {
        "schema": SCHEMA,
        "shape": list(obs.shape),
        "row_idx": obs.row_idx.tolist(),
        "col_idx": obs.col_idx.tolist(),
        "omega_r": np.column_stack([obs.omega_r.rows, obs.omega_r.cols]).tolist(),
        "omega_c": np.column_stack([obs.omega_c.rows, obs.omega_c.cols]).tolist(),
        "values": [[i, j, v] for i, j, v in zip(union.rows.tolist(), union.cols.tolist(), lookup.tolist())],
        "n_observed": len(union),
    }


def write_observation(path, obs):
    """JSON con claves ordenadas; un valor por entrada de Ω_R ∪ Ω_C, ordenados por (fila, columna)."""
    doc = observation_to_dict(obs)
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")
    logger.info(f"wrote observation ({doc['n_observed']} entries) to {path}")


def _pairs(raw, name, shape):
    try:
        arr = np.asarray(raw, dtype=np.int64)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{name}: entries must be integer [row, col] pairs", stage="io") from exc
    if arr.size == 0:
        return Mask.empty(shape)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise FormatError(f"{name}: entries must be [row, col] pairs", stage="io")
    return Mask(arr[:, 0], arr[:, 1], shape)


def observation_from_dict(doc):
    serializer = ObservationFileSerializer(data=doc)
    if not serializer.is_valid():
        raise FormatError(f"invalid observation file: {dict(serializer.errors)}", stage="io")
    data = serializer.validated_data
    shape = tuple(data["shape"])
    try:
        omega_r = _pairs(data["omega_r"], "omega_r", shape)
        omega_c = _pairs(data["omega_c"], "omega_c", shape)
        values = np.asarray(data["values"], dtype=np.float64)
        if values.size == 0:
            values = values.reshape(0, 3)
        if values.ndim != 2 or values.shape[1] != 3:
            raise FormatError("values: entries must be [row, col, value] triples", stage="io")
        coords = values[:, :2]
        if not np.array_equal(coords, np.round(coords)):
            raise FormatError("values: row and col must be integers", stage="io")
        given = Mask(coords[:, 0].astype(np.int64), coords[:, 1].astype(np.int64), shape)
        union = omega_r.union(omega_c)
        if given != union:
            raise FormatError("values must be defined exactly on omega_r ∪ omega_c", stage="io")
        # given ordena por índice lineal; reordenamos los valores igual
        order = np.argsort(coords[:, 0].astype(np.int64) * shape[1] + coords[:, 1].astype(np.int64), kind="stable")
        v = values[order, 2]
        return CcsObservation(
            shape=shape,
            row_idx=IndexSet(np.asarray(data["row_idx"], dtype=np.int64), shape[0]),
            col_idx=IndexSet(np.asarray(data["col_idx"], dtype=np.int64), shape[1]),
            omega_r=omega_r,
            omega_c=omega_c,
            values_r=v[np.searchsorted(union.linear, omega_r.linear)],
            values_c=v[np.searchsorted(union.linear, omega_c.linear)],
        )
    except FormatError:
        raise
    except (ArgumentError, TypeError, ValueError) as exc:
        raise FormatError(f"invalid observation file: {exc}", stage="io") from exc


def read_observation(path):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: not valid JSON: {exc.msg}", stage="io", offset=exc.pos) from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: observation must be a JSON object", stage="io")
    try:
        obs = observation_from_dict(doc)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}", stage="io") from exc
    logger.info(f"read observation {obs.shape[0]}x{obs.shape[1]} from {path}")
    return obs
