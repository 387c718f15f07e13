"""
Códec binario de matrices (.rcm) e importación/exportación CSV.

Formato: cabecera little-endian de 28 bytes (magic "RCURCMAT", u32 versión, u64 filas,
u64 columnas) seguida de filas×columnas valores float64 LE, por filas.
"""

import logging
from pathlib import Path

import numpy as np

from core.utils.errors import ArgumentError, FormatError
from core.utils.matrices import as_dense

logger = logging.getLogger(__name__)

MAGIC = b"RCURCMAT"
VERSION = 1
HEADER = np.dtype([("magic", "S8"), ("version", "<u4"), ("rows", "<u8"), ("cols", "<u8")])
PAYLOAD = np.dtype("<f8")


def write_matrix(path, m):
    m = as_dense(m)
    rows, cols = m.shape
    if rows == 0 or cols == 0:
        raise ArgumentError(f"cannot write a degenerate {rows}x{cols} matrix", stage="io")
    header = np.array([(MAGIC, VERSION, rows, cols)], dtype=HEADER)
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(m.astype(PAYLOAD, copy=False).tobytes(order="C"))
    logger.info(f"wrote {rows}x{cols} matrix to {path}")


def read_matrix(path):
    """
    :raises FormatError: magic incorrecto, versión no soportada o longitud errónea;
        el error lleva el offset del byte donde el fichero deja de cuadrar.
    """
    data = Path(path).read_bytes()
    if len(data) < HEADER.itemsize:
        raise FormatError(
            f"{path}: truncated header, expected {HEADER.itemsize} bytes, got {len(data)}",
            stage="io", offset=len(data),
        )
    header = np.frombuffer(data, dtype=HEADER, count=1)[0]
    if header["magic"] != MAGIC:
        raise FormatError(f"{path}: bad magic {bytes(header['magic'])!r}", stage="io", offset=0)
    if int(header["version"]) != VERSION:
        raise FormatError(f"{path}: unsupported version {int(header['version'])}", stage="io", offset=8)
    rows, cols = int(header["rows"]), int(header["cols"])
    if rows == 0 or cols == 0:
        raise FormatError(f"{path}: degenerate shape {rows}x{cols}", stage="io", offset=12)
    expected = HEADER.itemsize + rows * cols * PAYLOAD.itemsize
    if len(data) != expected:
        raise FormatError(
            f"{path}: payload length mismatch, expected {expected} bytes, got {len(data)}",
            stage="io", offset=min(len(data), expected),
        )
    m = np.frombuffer(data, dtype=PAYLOAD, offset=HEADER.itemsize).reshape(rows, cols)
    return m.astype(np.float64)


def write_matrix_csv(path, m):
    m = as_dense(m)
    np.savetxt(path, m, delimiter=",", fmt="%.17g")
    logger.info(f"wrote {m.shape[0]}x{m.shape[1]} matrix to {path} (csv)")


def read_matrix_csv(path):
    try:
        m = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise FormatError(f"{path}: invalid CSV matrix: {exc}", stage="io") from exc
    if m.size == 0:
        raise FormatError(f"{path}: empty CSV matrix", stage="io")
    return np.ascontiguousarray(m)


def load_any(path):
    """.csv → CSV, cualquier otra extensión → códec binario."""
    if Path(path).suffix.lower() == ".csv":
        return read_matrix_csv(path)
    return read_matrix(path)
