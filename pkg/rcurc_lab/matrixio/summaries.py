import json
import logging
import math

from core.utils.errors import FormatError

logger = logging.getLogger(__name__)

SUMMARY_SCHEMA = 1


def _json_safe(value):
    # JSON no admite inf/nan: se escriben como cadena ("inf", "-inf", "nan")
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def write_summary(path, summary):
    doc = {"schema": SUMMARY_SCHEMA}
    doc.update(_json_safe(summary))
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write("\n")
    logger.info(f"wrote summary to {path}")
    return doc


def read_summary(path):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: not valid JSON: {exc.msg}", stage="io", offset=exc.pos) from exc
    if not isinstance(doc, dict) or doc.get("schema") != SUMMARY_SCHEMA:
        raise FormatError(f"{path}: unsupported summary schema", stage="io")
    return doc
