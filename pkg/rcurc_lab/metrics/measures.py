import logging
import math
from collections import Counter
from dataclasses import dataclass
from numbers import Real

import numpy as np

from core.utils.errors import ArgumentError, NumericError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConvergenceFit:
    """Ajuste ln(e_k) ≈ intercept + slope·k."""
    slope: float
    r2: float
    iters_used: int
    intercept: float = 0.0

    @property
    def rate(self):
        """Factor de contracción por iteración, exp(slope)."""
        return math.exp(self.slope)


def _same_shape(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ArgumentError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def recovery_error(x_hat, x_true):
    """‖x_hat − x_true‖_F / ‖x_true‖_F."""
    x_hat, x_true = _same_shape(x_hat, x_true)
    norm = float(np.linalg.norm(x_true))
    if norm == 0:
        raise NumericError("recovery error undefined for a zero ground truth")
    return float(np.linalg.norm(x_hat - x_true)) / norm


def psnr(reference, estimate, peak="auto"):
    """
    10·log10(peak² / MSE) en dB, con el MSE sobre todas las entradas.

    peak="auto" usa max|reference|. Entradas idénticas dan math.inf.
    """
    reference, estimate = _same_shape(reference, estimate)
    if peak == "auto":
        peak = float(np.max(np.abs(reference))) if reference.size else 0.0
    peak = float(peak)
    diff = reference - estimate
    mse = float(np.vdot(diff, diff)) / diff.size
    if mse == 0:
        return math.inf
    if peak <= 0:
        raise ArgumentError(f"PSNR peak must be positive, got {peak}")
    return 10.0 * math.log10(peak * peak / mse)


def fit_linear_rate(trace):
    """
    Ajuste por mínimos cuadrados de ln(e_k) frente a k.

    Acepta filas TraceEntry o pares (iter, e_k). Solo se usa el prefijo con e_k
    finito y estrictamente positivo. Una traza plana da slope 0 y r2 0.
    """
    ks, logs = [], []
    for row in trace:
        k, e_k = row[0], row[1]
        if not (math.isfinite(e_k) and e_k > 0):
            break
        ks.append(float(k))
        logs.append(math.log(e_k))
    if len(ks) < 2:
        raise ArgumentError(f"need at least 2 positive e_k values, got {len(ks)}")

    k = np.asarray(ks)
    y = np.asarray(logs)
    k_c = k - k.mean()
    y_c = y - y.mean()
    slope = float(np.dot(k_c, y_c) / np.dot(k_c, k_c))
    intercept = float(y.mean() - slope * k.mean())
    ss_tot = float(np.dot(y_c, y_c))
    if ss_tot == 0:
        return ConvergenceFit(slope=0.0, r2=0.0, iters_used=len(ks), intercept=intercept)
    residual = y - (intercept + slope * k)
    r2 = 1.0 - float(np.dot(residual, residual)) / ss_tot
    return ConvergenceFit(slope=slope, r2=min(1.0, max(0.0, r2)), iters_used=len(ks), intercept=intercept)


def _is_number(value):
    return isinstance(value, Real) and not isinstance(value, bool)


def summarize_repeats(summaries):
    """
    Agrega los resúmenes de cada repetición.

    Para cada campo numérico presente en todos: mean, std (poblacional), min y
    max. Cuenta además las causas de terminación.
    """
    if not summaries:
        raise ArgumentError("no repeats to summarize")
    keys = set.intersection(*(set(s) for s in summaries))
    fields = {}
    for key in sorted(keys):
        values = [s[key] for s in summaries]
        if not all(_is_number(v) for v in values):
            continue
        arr = np.asarray(values, dtype=np.float64)
        fields[key] = {
            "mean": float(arr.mean()),
            "std": float(arr.std()),
            "min": float(arr.min()),
            "max": float(arr.max()),
        }
    terminations = Counter(str(s["termination"]) for s in summaries if "termination" in s)
    logger.debug(f"summarized {len(summaries)} repeats over {len(fields)} numeric fields")
    return {
        "repeats": len(summaries),
        "fields": fields,
        "terminations": dict(sorted(terminations.items())),
    }
