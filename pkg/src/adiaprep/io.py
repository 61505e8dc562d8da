"""Atomic file output and table formats."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

UNITS_NOTE = "energies in units of Jz; times in units of 1/Jz; hbar = 1"
SWEEP_COLUMNS = ("approach", "ratio", "tau", "epsilon_at", "n_steps", "dt")


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary sibling file and rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _num(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj


def dumps_json(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def format_csv(rows, columns=SWEEP_COLUMNS) -> str:
    buf = io.StringIO()
    buf.write(f"# {UNITS_NOTE}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_num(getattr(row, c) if not isinstance(row, dict) else row[c]) for c in columns])
    return buf.getvalue()


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))
