"""CSV / JSON emission with a fixed column order."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict
from pathlib import Path
from typing import Optional, Sequence

__all__ = ["COLUMNS", "format_value", "records_to_rows", "render", "emit_results"]

COLUMNS = (
    "estimator",
    "ebn0_db",
    "nmse_mean",
    "nmse_stderr",
    "sve_rate_initial",
    "sve_rate_final",
    "selected_fraction",
    "selection_precision",
    "trials",
)


def format_value(v):
    if isinstance(v, float):
        return f"{v:.9g}"
    return v


def records_to_rows(records, sweep_key: Optional[str] = None, sweep_values: Optional[Sequence] = None) -> list[dict]:
    rows = []
    for i, rec in enumerate(records):
        row = asdict(rec) if not isinstance(rec, dict) else dict(rec)
        ordered = {k: row[k] for k in COLUMNS}
        if sweep_key is not None:
            ordered = {sweep_key: sweep_values[i], **ordered}
        rows.append(ordered)
    return rows


def render(rows: list[dict], fmt: str) -> str:
    if not rows:
        raise ValueError("no records to emit")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(list(rows[0]))
        for row in rows:
            writer.writerow([format_value(v) for v in row.values()])
        return buf.getvalue()
    if fmt == "json":
        flat = [
            {k: float(format_value(v)) if isinstance(v, float) else v for k, v in row.items()}
            for row in rows
        ]
        return json.dumps(flat, indent=1) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def emit_results(records, fmt: str = "csv", path=None, sweep_key=None, sweep_values=None) -> str:
    """Serialize records; write to ``path`` when given and return the text."""
    text = render(records_to_rows(records, sweep_key, sweep_values), fmt)
    if path is not None:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write results to {path}: {exc}") from exc
    return text
