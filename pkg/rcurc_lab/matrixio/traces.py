import csv
import logging

from core.utils.errors import FormatError
from solver.structures import TraceEntry

logger = logging.getLogger(__name__)

TRACE_HEADER = ["iter", "e_k", "zeta_k", "wall_ms"]
TERMINATION_PREFIX = "# termination="


def _g17(value):
    return f"{value:.17g}"


def write_trace(path, report):
    """CSV `iter,e_k,zeta_k,wall_ms` (17 cifras significativas) más una línea `# termination=`."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for row in report.trace:
            writer.writerow([row.iter, _g17(row.e_k), _g17(row.zeta_k), _g17(row.wall_ms)])
        fh.write(f"{TERMINATION_PREFIX}{report.termination}\n")
    logger.info(f"wrote trace ({len(report.trace)} iterations) to {path}")


def read_trace(path):
    """Devuelve (lista de TraceEntry, causa de terminación o None)."""
    rows = []
    termination = None
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].split(",") != TRACE_HEADER:
        raise FormatError(f"{path}: missing trace header {','.join(TRACE_HEADER)}", stage="io")
    for lineno, line in enumerate(lines[1:], start=2):
        if line.startswith(TERMINATION_PREFIX):
            termination = line[len(TERMINATION_PREFIX):].strip()
            continue
        if not line or line.startswith("#"):
            continue
        fields = line.split(",")
        try:
            rows.append(TraceEntry(int(fields[0]), float(fields[1]), float(fields[2]), float(fields[3])))
        except (IndexError, ValueError) as exc:
            raise FormatError(f"{path}:{lineno}: malformed trace row", stage="io") from exc
    return rows, termination
