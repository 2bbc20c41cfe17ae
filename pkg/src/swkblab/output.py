"""CSV and JSON emission with fixed formatting, so identical runs give identical bytes."""
import csv
import io
import json
import math

import numpy as np

SCHEMA_VERSION = 1
SIG_DIGITS = 15


def fmt_value(v):
    """One CSV cell: 15 significant digits for floats, lower-case booleans."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        out = format(v, f".{SIG_DIGITS}g")
        return "0" if out == "-0" else out
    return str(v)


def csv_text(columns, rows):
    """RFC 4180 style CSV with LF line endings; ``status`` is forced to be last."""
    columns = list(columns)
    if "status" in columns:
        columns.remove("status")
    columns.append("status")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt_value(row.get(c, "ok" if c == "status" else None)) for c in columns])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        # JSON has no NaN/inf; keep them as strings rather than emit invalid JSON
        return v if math.isfinite(v) else fmt_value(v)
    if isinstance(v, (complex, np.complexfloating)):
        return [_jsonable(v.real), _jsonable(v.imag)]
    return v


def json_text(payload: dict):
    doc = {"schema_version": SCHEMA_VERSION}
    doc.update(_jsonable(payload))
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
