"""Result serialization: CSV tables and JSON result records."""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import math
from dataclasses import dataclass, field

from . import __version__

TOOL_NAME = "squeezeclock"


def format_value(x) -> str:
    """CSV cell text: shortest round-trip floats, lowercase booleans, empty for None."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float) or hasattr(x, "dtype"):
        return repr(float(x))
    return str(x)


def _json_value(x):
    if isinstance(x, bool) or x is None or isinstance(x, (str, int)):
        return x
    if isinstance(x, dict):
        return {k: _json_value(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_value(v) for v in x]
    try:
        v = float(x)
    except (TypeError, ValueError):
        return str(x)
    return v if math.isfinite(v) else None


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def provenance(config_hash: str, canonical: bool = False) -> dict:
    """Tool version, config digest and a UTC timestamp (null in canonical mode)."""
    stamp = None if canonical else _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return {"tool": TOOL_NAME, "tool_version": __version__, "config_hash": config_hash,
            "timestamp": stamp}


@dataclass
class ResultRecord:
    """One run: echoed input, tabular results, summary values and provenance."""

    subcommand: str
    input: dict
    columns: list
    rows: list
    provenance: dict
    summary: dict = field(default_factory=dict)

    def to_json(self) -> str:
        obj = {
            "subcommand": self.subcommand,
            "input": self.input,
            "results": [{c: _json_value(v) for c, v in zip(self.columns, row)} for row in self.rows],
            "summary": {k: _json_value(v) for k, v in self.summary.items()},
            "provenance": self.provenance,
        }
        return json.dumps(obj, indent=2, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        return csv_text(self.columns, self.rows)
