"""Deterministic writers for result tables.

Every table goes out twice: a CSV with a '#'-prefixed metadata header,
and a self-describing JSON companion.  Formatting is fixed so that
identical experiments produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def write_csv(path: Path, metadata: dict, columns: list[str], rows: list[tuple]) -> None:
    lines = []
    for key in metadata:
        lines.append(f"# {key}: {metadata[key]}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(format_cell(v) for v in row))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")


def write_json(path: Path, metadata: dict, columns: list[str], rows: list[tuple]) -> None:
    doc = {
        "metadata": metadata,
        "columns": columns,
        "rows": [[None if v is None else v for v in row] for row in rows],
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")
