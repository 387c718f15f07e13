import logging
import re
from pathlib import Path

import numpy as np
from PIL import Image

from core.utils.errors import ArgumentError, FormatError

logger = logging.getLogger(__name__)

# P5 <ws> ancho <ws> alto <ws> maxval <un solo espacio>, con comentarios '#' entre campos
_PGM_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n)*(\S+)")


def read_pgm_header(data, path="<bytes>"):
    """Devuelve (width, height, maxval, offset del primer píxel)."""
    fields = []
    pos = 0
    for _ in range(4):
        match = _PGM_TOKEN.match(data, pos)
        if not match:
            raise FormatError(f"{path}: truncated PGM header", stage="io", offset=pos)
        fields.append(match.group(1))
        pos = match.end()
    magic, width, height, maxval = fields
    if magic != b"P5":
        raise FormatError(f"{path}: only binary PGM (P5) frames are supported, got {magic[:2]!r}", stage="io", offset=0)
    try:
        width, height, maxval = int(width), int(height), int(maxval)
    except ValueError as exc:
        raise FormatError(f"{path}: malformed PGM header", stage="io", offset=pos) from exc
    if maxval > 255:
        raise FormatError(f"{path}: 16-bit PGM is not supported (maxval={maxval})", stage="io", offset=pos)
    if width < 1 or height < 1 or maxval < 1:
        raise FormatError(f"{path}: invalid PGM dimensions {width}x{height}", stage="io", offset=pos)
    return width, height, maxval, pos + 1


def read_frame(path):
    """
    Un frame PGM P5 de 8 bits como array (alto × ancho) float64.

    Las muestras se devuelven tal cual: con maxval < 255 no se reescalan a
    [0, 255]. Una muestra mayor que maxval es un error de formato.
    """
    path = Path(path)
    data = path.read_bytes()
    width, height, maxval, offset = read_pgm_header(data, path)
    end = offset + width * height
    if len(data) < end:
        raise FormatError(
            f"{path}: expected {width * height} pixel bytes, got {max(len(data) - offset, 0)}",
            stage="io", offset=len(data),
        )
    try:
        # decodificador "raw" de pillow sobre el cuerpo ya validado
        img = Image.frombytes("L", (width, height), data[offset:end])
    except ValueError as exc:
        raise FormatError(f"{path}: cannot decode frame: {exc}", stage="io", offset=offset) from exc
    frame = np.asarray(img, dtype=np.float64)
    if frame.max() > maxval:
        bad = int(np.argmax(frame > maxval))
        raise FormatError(
            f"{path}: sample {int(frame.flat[bad])} exceeds maxval {maxval}", stage="io", offset=offset + bad,
        )
    return frame


def frames_to_matrix(paths):
    """
    Apila los frames como columnas: cada frame se vectoriza por columnas, así que
    el resultado es (ancho·alto) × len(paths).
    """
    paths = list(paths)
    if not paths:
        raise ArgumentError("at least one frame is required", stage="io")
    first = read_frame(paths[0])
    height, width = first.shape
    out = np.empty((height * width, len(paths)))
    out[:, 0] = first.flatten(order="F")
    for t, path in enumerate(paths[1:], start=1):
        frame = read_frame(path)
        if frame.shape != first.shape:
            raise FormatError(
                f"{path}: frame is {frame.shape[1]}x{frame.shape[0]}, expected {width}x{height}", stage="io",
            )
        out[:, t] = frame.flatten(order="F")
    logger.info(f"loaded {len(paths)} frames of {width}x{height}")
    return out


def matrix_to_frames(m, height, width, out_dir, prefix="frame"):
    """Escribe cada columna como PGM de 8 bits (recortada a [0, 255] y redondeada). Devuelve las rutas."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != height * width:
        raise ArgumentError(f"matrix with {m.shape[0]} rows cannot hold {height}x{width} frames", stage="io")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for t in range(m.shape[1]):
        frame = np.rint(np.clip(m[:, t], 0.0, 255.0)).astype(np.uint8).reshape((height, width), order="F")
        path = out_dir / f"{prefix}_{t:04d}.pgm"
        Image.fromarray(np.ascontiguousarray(frame)).save(path, format="PPM")
        paths.append(path)
    logger.info(f"wrote {len(paths)} frames to {out_dir}")
    return paths


def read_frames_list(path):
    """
    Fichero de texto con una ruta de frame por línea (se ignoran comentarios
    '#' y líneas en blanco). Las rutas relativas se resuelven contra el directorio de la lista.
    """
    path = Path(path)
    base = path.parent
    frames = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        frame = Path(line)
        frames.append(frame if frame.is_absolute() else base / frame)
    if not frames:
        raise FormatError(f"{path}: frame list is empty", stage="io")
    return frames
