################################################################################################################################
############################## RCURC: UMBRAL DECRECIENTE + GRADIENTE PROYECTADO EN FORMA CUR ###################################
################################################################################################################################

import logging
import time

import numpy as np

from core.linalg import cur_product, numerical_rank, pinv_rank_r, truncated_svd
from core.utils.errors import ArgumentError, NumericError, SolverError
from sampling.masks import Mask
from .ledger import NULL_LEDGER
from .structures import AUTO, CurFactors, SolveReport, SparseCross, Termination, TraceEntry

logger = logging.getLogger(__name__)


def hard_threshold(m, zeta):
    """Anula las entradas con |m_ij| < zeta; las que valen justo zeta se conservan."""
    if zeta < 0:
        raise ArgumentError(f"threshold must be >= 0, got {zeta}")
    m = np.asarray(m, dtype=np.float64)
    return np.where(np.abs(m) >= zeta, m, 0.0)


def zeta_at(cfg, k):
    """ζ_{k+1} = γ^k ζ_0, el umbral del paso k (el paso 0 usa ζ_0)."""
    if k < 0:
        raise ArgumentError(f"iteration index must be >= 0, got {k}")
    if cfg.zeta0 == AUTO:
        raise ArgumentError("zeta0 is 'auto'; resolve the config against an observation first")
    return cfg.gamma ** k * cfg.zeta0


def _as_bool(mask, shape):
    if isinstance(mask, Mask):
        if mask.shape != shape:
            raise ArgumentError(f"mask shape {mask.shape} does not match block {shape}")
        return mask.to_bool()
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != shape:
        raise ArgumentError(f"mask shape {mask.shape} does not match block {shape}")
    return mask


def union_sum(r_blk, c_blk, omega_r_core, omega_c_core, eta_r, eta_c):
    """
    Mezcla de los bloques |I|×|J| de R y C.

    Solo en Ω_R → r; solo en Ω_C → c; en ambos → (η_C·r + η_R·c)/(η_R + η_C);
    en ninguno → 0. Las máscaras pueden ser Mask (coordenadas del bloque) o
    arrays booleanos.
    """
    r_blk = np.asarray(r_blk, dtype=np.float64)
    c_blk = np.asarray(c_blk, dtype=np.float64)
    if r_blk.shape != c_blk.shape:
        raise ArgumentError(f"block shapes differ: {r_blk.shape} vs {c_blk.shape}")
    total = eta_r + eta_c
    if total == 0:
        raise ArgumentError("eta_r + eta_c must be nonzero")
    in_r = _as_bool(omega_r_core, r_blk.shape)
    in_c = _as_bool(omega_c_core, r_blk.shape)

    out = np.zeros_like(r_blk)
    only_r = in_r & ~in_c
    only_c = in_c & ~in_r
    both = in_r & in_c
    out[only_r] = r_blk[only_r]
    out[only_c] = c_blk[only_c]
    out[both] = (eta_c * r_blk[both] + eta_r * c_blk[both]) / total
    return out


def restricted_reconstruct(f, which):
    """
    Panel de filas [X]_{I,:} (which="rows") o de columnas [X]_{:,J} (which="cols")
    de X = C U† R, sin formar X.
    """
    I, J = f.row_idx.values, f.col_idx.values
    u_pinv = pinv_rank_r(f.u)
    if which == "rows":
        return (f.c[I, :] @ u_pinv) @ f.r_mat
    if which == "cols":
        return f.c @ (u_pinv @ f.r_mat[:, J])
    raise ArgumentError(f"which must be 'rows' or 'cols', got {which!r}")


def _panels(f, track=NULL_LEDGER.track):
    x_rows = track("x_rows", restricted_reconstruct(f, "rows"))
    x_cols = track("x_cols", restricted_reconstruct(f, "cols"))
    # una sola copia del bloque I×J
    x_cols[f.row_idx.values, :] = x_rows[:, f.col_idx.values]
    return x_rows, x_cols


def _column_only(obs):
    """Ω_C fuera de las filas I, en coordenadas del panel de columnas."""
    outside = ~obs.row_idx.contains(np.arange(obs.shape[0]))
    return obs.col_panel().own & outside[:, None]


def _observed_energy(obs):
    rp, cp = obs.row_panel(), obs.col_panel()
    y_r = rp.values[rp.observed]
    y_c = cp.values[_column_only(obs)]
    return float(np.dot(y_r, y_r) + np.dot(y_c, y_c))


def _residual_energy(obs, x_rows, x_cols, s):
    rp, cp = obs.row_panel(), obs.col_panel()
    d_r = (s.rows + x_rows - rp.values)[rp.observed]
    d_c = (s.cols + x_cols - cp.values)[_column_only(obs)]
    return float(np.dot(d_r, d_r) + np.dot(d_c, d_c))


def compute_error(obs, f, s):
    """
    e = Σ_Ω (s + x − y)² / Σ_Ω y² sobre Ω = Ω_R ∪ Ω_C, cada entrada una sola vez.

    :raises NumericError: si todas las entradas observadas de Y son cero.
    """
    denominator = _observed_energy(obs)
    if denominator <= 0:
        raise NumericError("relative error undefined: all observed entries of Y are zero")
    x_rows, x_cols = _panels(f)
    return _residual_energy(obs, x_rows, x_cols, s) / denominator


def _advance(obs, cfg, x_rows, x_cols, k, track):
    # x_rows y x_cols son copias privadas de X_k: se actualizan en sitio y pasan a ser R_{k+1} y C_{k+1}
    I, J = obs.row_idx.values, obs.col_idx.values
    rp, cp = obs.row_panel(), obs.col_panel()
    zeta = zeta_at(cfg, k)

    # S_{k+1}: el residuo vale 0 fuera de lo observado
    step_r = track("step_r", rp.values - x_rows)
    step_r[~rp.observed] = 0.0
    step_c = track("step_c", cp.values - x_cols)
    step_c[~cp.observed] = 0.0
    s_rows = track("s_rows", hard_threshold(step_r, zeta))
    s_cols = track("s_cols", hard_threshold(step_c, zeta))
    s_cols[I, :] = s_rows[:, J]
    s_next = SparseCross(rows=s_rows, cols=s_cols, row_idx=obs.row_idx, col_idx=obs.col_idx)

    # pasos de gradiente sobre Ω_R y Ω_C, en el mismo buffer que el residuo
    step_r -= s_rows
    step_r[~rp.own] = 0.0
    step_r *= cfg.eta_r
    step_c -= s_cols
    step_c[~cp.own] = 0.0
    step_c *= cfg.eta_c

    # núcleo: X_k más la suma-unión de los incrementos; fuera de Ω se conserva X_k
    merged = track("core", x_rows[:, J] + union_sum(
        step_r[:, J], step_c[I, :], rp.own[:, J], cp.own[I, :], cfg.eta_r, cfg.eta_c,
    ))
    core = truncated_svd(merged, cfg.rank)
    r_next = x_rows
    r_next += step_r
    c_next = x_cols
    c_next += step_c
    del step_r, step_c
    u_mat = core.reconstruct()
    r_next[:, J] = u_mat
    c_next[I, :] = u_mat

    f_next = CurFactors(c=c_next, u=core, r_mat=r_next, row_idx=obs.row_idx, col_idx=obs.col_idx, rank=cfg.rank)
    deficient = numerical_rank(core.sigma) < cfg.rank
    return f_next, s_next, deficient


def rcurc_step(obs, f_k, cfg, k):
    """
    Una iteración de RCURC desde X_k = f_k.

    Umbraliza el residuo observado en S_{k+1}, da los pasos de gradiente en
    ambos paneles, los mezcla en el núcleo, lo proyecta a rango r y lo
    reescribe en los dos paneles. X_{k+1} completo nunca se forma.
    """
    cfg = cfg.resolved(obs)
    if f_k.row_idx != obs.row_idx or f_k.col_idx != obs.col_idx:
        raise ArgumentError("factors and observation use different index sets")
    x_rows, x_cols = _panels(f_k)
    try:
        f_next, s_next, _ = _advance(obs, cfg, x_rows, x_cols, k, NULL_LEDGER.track)
    except NumericError as exc:
        exc.iteration = k + 1
        raise
    return f_next, s_next


def solve(obs, cfg, *, clock=time.perf_counter, ledger=None):
    """
    Ejecuta RCURC desde X_0 = 0 hasta e_k ≤ eps, estancamiento o max_iters.

    :param clock: fuente de segundos para la columna wall_ms; con None se escribe
        0.0 y la traza depende solo de los datos.
    :param ledger: BufferLedger que registra cada reserva de panel o núcleo y
        el pico de memoria de toda la ejecución.
    :raises SolverError: fallo numérico; lleva el último informe válido.
    """
    n_i, n_j = len(obs.row_idx), len(obs.col_idx)
    if cfg.rank > min(n_i, n_j):
        raise ArgumentError(f"rank {cfg.rank} exceeds the core size {n_i}x{n_j}")
    cfg = cfg.resolved(obs)
    ledger = NULL_LEDGER if ledger is None else ledger
    with ledger.watch():
        return _iterate(obs, cfg, clock, ledger.track)


def _iterate(obs, cfg, clock, track):
    n1, n2 = obs.shape
    n_i, n_j = len(obs.row_idx), len(obs.col_idx)
    denominator = _observed_energy(obs)
    if denominator <= 0:
        raise SolverError("relative error undefined: all observed entries of Y are zero", iteration=0)

    logger.info(
        f"RCURC start: {n1}x{n2} |I|={n_i} |J|={n_j} r={cfg.rank} "
        f"eta_r={cfg.eta_r:.6g} eta_c={cfg.eta_c:.6g} zeta0={cfg.zeta0:.6g} gamma={cfg.gamma}"
    )
    start = clock() if clock else 0.0
    x_rows = track("x_rows", np.zeros((n_i, n2)))
    x_cols = track("x_cols", np.zeros((n1, n_j)))
    trace = []
    report = None
    stalled = 0
    deficient_steps = 0

    for k in range(cfg.max_iters):
        try:
            f, s, deficient = _advance(obs, cfg, x_rows, x_cols, k, track)
            x_rows, x_cols = _panels(f, track)
            e_k = _residual_energy(obs, x_rows, x_cols, s) / denominator
        except NumericError as exc:
            logger.error(f"RCURC failed at iteration {k + 1}: {exc}")
            raise SolverError(f"iteration {k + 1}: {exc}", report=report, iteration=k + 1) from exc
        if not np.isfinite(e_k):
            raise SolverError(f"iteration {k + 1}: non-finite e_k", report=report, iteration=k + 1)

        deficient_steps += deficient
        wall_ms = (clock() - start) * 1000.0 if clock else 0.0
        trace.append(TraceEntry(iter=k + 1, e_k=e_k, zeta_k=zeta_at(cfg, k), wall_ms=wall_ms))
        logger.debug(f"k={k + 1} e_k={e_k:.6e} zeta_k={trace[-1].zeta_k:.6e}")

        if len(trace) > 1:
            prev = trace[-2].e_k
            stalled = stalled + 1 if prev - e_k < cfg.stagnation_tol * prev else 0

        if e_k <= cfg.eps:
            termination = Termination.CONVERGED
        elif stalled >= cfg.stagnation_window:
            termination = Termination.STAGNATED
        elif k + 1 >= cfg.max_iters:
            termination = Termination.MAX_ITERS
        else:
            termination = None

        report = SolveReport(
            trace=list(trace),
            termination=termination or Termination.MAX_ITERS,
            factors=f,
            sparse=s,
            eta_r=cfg.eta_r,
            eta_c=cfg.eta_c,
            zeta0=cfg.zeta0,
            rank_deficient_steps=deficient_steps,
            config=cfg,
        )
        if termination is not None:
            break

    logger.info(f"RCURC {report.termination}: {report.iterations} iterations, e_k={report.final_error:.3e}")
    if deficient_steps:
        logger.warning(f"core lost rank in {deficient_steps} iterations")
    return report


def materialize(f):
    """Matriz n1×n2 completa C U† R. Solo para evaluar y exportar."""
    logger.debug(f"materializing {f.shape[0]}x{f.shape[1]} estimate")
    return cur_product(f.c, pinv_rank_r(f.u), f.r_mat)
