"""
Vídeo sintético tipo videovigilancia: fondo estático con iluminación que varía
despacio (rango 1) más un pequeño objeto en movimiento en primer plano.

Los frames se vectorizan por columnas y se apilan como columnas (píxeles × frames),
igual que matrixio.frames.frames_to_matrix.
"""

import logging
import math

import numpy as np

from core.utils.errors import ArgumentError
from .generators import SyntheticProblem

logger = logging.getLogger(__name__)


def _background_image(height, width, rng):
    # fondo suave: suma de unos pocos modos senoidales de baja frecuencia
    yy = np.linspace(0.0, 1.0, height)[:, None]
    xx = np.linspace(0.0, 1.0, width)[None, :]
    image = np.full((height, width), 110.0)
    for _ in range(3):
        fy, fx = rng.uniform(0.5, 2.0, size=2)
        phase = rng.uniform(0.0, 2 * np.pi)
        image += rng.uniform(10.0, 25.0) * np.sin(np.pi * (fy * yy + fx * xx) + phase)
    return image


def make_video_surrogate(height, width, frames, alpha, rng, gain_spread=0.05):
    """
    Devuelve un SyntheticProblem con x_true = fondo (rango 1) e
    y = vídeo, todos los valores en [0, 255].

    El primer plano es una caja clara u oscura en una posición aleatoria de cada frame;
    su área es como mucho α·píxeles, y un píxel cubierto en más de
    ⌊α·frames⌋ frames conserva solo sus primeros ⌊α·frames⌋ impactos.
    """
    if height < 1 or width < 1 or frames < 1:
        raise ArgumentError("video dimensions must be positive")
    if not 0.0 <= alpha < 0.5:
        raise ArgumentError(f"alpha must lie in [0, 0.5), got {alpha}")

    pixels = height * width
    background = _background_image(height, width, rng).flatten(order="F")
    gains = 1.0 + gain_spread * rng.uniform(-1.0, 1.0, size=frames)
    x_true = np.outer(background, gains)

    y = x_true.copy()
    area_cap = int(math.floor(round(alpha * pixels, 9)))
    pixel_cap = int(math.floor(round(alpha * frames, 9)))
    if area_cap > 0 and pixel_cap > 0:
        box_h = max(1, min(height, int(math.sqrt(area_cap * height / width))))
        box_w = max(1, min(width, area_cap // box_h))
        hits = np.zeros(pixels, dtype=np.int64)
        for t in range(frames):
            top = int(rng.integers(0, height - box_h + 1))
            left = int(rng.integers(0, width - box_w + 1))
            rows, cols = np.meshgrid(np.arange(top, top + box_h), np.arange(left, left + box_w), indexing="ij")
            idx = (cols * height + rows).reshape(-1)
            idx = idx[hits[idx] < pixel_cap]
            hits[idx] += 1
            y[idx, t] = rng.uniform(0.0, 255.0, size=idx.size)

    np.clip(y, 0.0, 255.0, out=y)
    s_true = y - x_true
    logger.info(f"video surrogate {height}x{width}x{frames} alpha={alpha}")
    return SyntheticProblem(x_true=x_true, s_true=s_true, y=y, rank=1, alpha=alpha, amp=1.0)
