"""CSV/JSON emission and the per-scenario result cache.

Layout: <cache root>/<scenario_hash>/<command>.csv next to
<command>.summary.json.  The root is ./cache unless FOCKMF_CACHE_DIR is set.
A cache hit serves the stored bytes unchanged, so re-runs are bit-identical.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

from .runners import ResultRow

HEADER = (
    "scenario_hash,command,epsilon,t,observable,lhs_re,lhs_im,rhs_re,rhs_im,"
    "abs_error,envelope_A,envelope_B,envelope_C,wall_ms"
)


class EmptyRunError(ValueError):
    pass


def cache_root() -> Path:
    return Path(os.environ.get("FOCKMF_CACHE_DIR", "cache"))


def cache_paths(scenario_hash: str, command: str, variant: str = "") -> tuple[Path, Path]:
    base = cache_root() / scenario_hash
    stem = command + variant
    return base / f"{stem}.csv", base / f"{stem}.summary.json"


def _num(x) -> str:
    """Shortest round-trip text for floats; blanks for missing values."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def row_fields(scenario_hash: str, row: ResultRow) -> list[str]:
    lhs, rhs = row.lhs, row.rhs
    return [
        scenario_hash, row.command, _num(row.epsilon), _num(row.t), row.observable,
        _num(None if lhs is None else lhs.real), _num(None if lhs is None else lhs.imag),
        _num(None if rhs is None else rhs.real), _num(None if rhs is None else rhs.imag),
        _num(row.abs_error), _num(row.envelope_A), _num(row.envelope_B), _num(row.envelope_C),
        _num(row.wall_ms),
    ]


def render_csv(scenario_hash: str, rows: list[ResultRow]) -> str:
    if not rows:
        raise EmptyRunError("refusing to emit an empty run: no result rows were produced")
    buf = io.StringIO()
    buf.write(HEADER + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow(row_fields(scenario_hash, row))
    return buf.getvalue()


def csv_to_records(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def store(scenario_hash: str, command: str, variant: str, csv_text: str, summary: dict):
    csv_path, summary_path = cache_paths(scenario_hash, command, variant)
    _write_atomic(csv_path, csv_text)
    _write_atomic(summary_path, json.dumps(summary, indent=2, sort_keys=True) + "\n")


def lookup(scenario_hash: str, command: str, variant: str = ""):
    csv_path, summary_path = cache_paths(scenario_hash, command, variant)
    if csv_path.exists() and summary_path.exists():
        return csv_path.read_text(), json.loads(summary_path.read_text())
    return None


def write_outputs(out_dir: Path, command: str, csv_text: str, summary: dict, fmt: str) -> list[Path]:
    """Write the rows (csv or json) and the summary into ``out_dir``."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"output directory {out_dir} is not writable: {exc}") from exc
    written = []
    if fmt == "csv":
        path = out_dir / f"{command}.csv"
        _write_atomic(path, csv_text)
    elif fmt == "json":
        path = out_dir / f"{command}.json"
        _write_atomic(path, json.dumps(csv_to_records(csv_text), indent=2) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    written.append(path)
    summary_path = out_dir / f"{command}.summary.json"
    _write_atomic(summary_path, json.dumps(summary, indent=2, sort_keys=True) + "\n")
    written.append(summary_path)
    return written
