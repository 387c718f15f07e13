"""
Factores CUR en disco (.npz): bastan para reconstruir la estimación C U† R
sin volver a ejecutar el solver.
"""

import logging
import zipfile

import numpy as np

from core.linalg import SvdR
from core.utils.errors import ArgumentError, FormatError
from sampling.masks import IndexSet
from solver.structures import CurFactors

logger = logging.getLogger(__name__)

_KEYS = ("c", "u", "sigma", "v", "r_mat", "row_idx", "col_idx", "shape", "rank")


def write_factors(path, f):
    with open(path, "wb") as fh:
        np.savez(
            fh,
            c=f.c,
            u=f.u.u,
            sigma=f.u.sigma,
            v=f.u.v,
            r_mat=f.r_mat,
            row_idx=f.row_idx.values,
            col_idx=f.col_idx.values,
            shape=np.asarray(f.shape, dtype=np.int64),
            rank=np.asarray(f.rank, dtype=np.int64),
        )
    logger.info(f"wrote rank-{f.rank} CUR factors to {path}")


def read_factors(path):
    try:
        with np.load(path, allow_pickle=False) as data:
            missing = [k for k in _KEYS if k not in data.files]
            if missing:
                raise FormatError(f"{path}: missing arrays {missing}", stage="io")
            n1, n2 = (int(s) for s in data["shape"])
            return CurFactors(
                c=data["c"],
                u=SvdR(u=data["u"], sigma=data["sigma"], v=data["v"]),
                r_mat=data["r_mat"],
                row_idx=IndexSet(data["row_idx"], n1),
                col_idx=IndexSet(data["col_idx"], n2),
                rank=int(data["rank"]),
            )
    except FormatError:
        raise
    except (zipfile.BadZipFile, ArgumentError, ValueError) as exc:
        raise FormatError(f"{path}: invalid factors file: {exc}", stage="io") from exc
