"""Typed CSV tables passed between pipeline stages.

Cells are written RFC 4180 style in UTF-8. Lists and objects are JSON, absent
values are empty cells, timestamps are RFC 3339 and floats carry six decimals.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Iterable, Optional

from tgscope.model import format_ts, parse_ts

INT_COLUMNS = {
    "message_id", "channel_id", "views", "forwards", "replies_count",
    "fwd_from_channel_id", "reactions_total", "sentences_count", "topic_id",
}
TS_COLUMNS = {"date", "edit_date"}
JSON_COLUMNS = {"reactions", "media", "urls", "domains", "emojis", "mentions"}
FLOAT_COLUMNS = {"virality_ratio", "engagement_rate", "polarity", "subjectivity"}
BOOL_COLUMNS = {"is_viral"}


def encode_cell(column: str, value: Any) -> str:
    if value is None:
        return ""
    if column in TS_COLUMNS:
        return format_ts(value)
    if column in JSON_COLUMNS:
        return json.dumps(value, ensure_ascii=False, separators=(",", ":"))
    if column in FLOAT_COLUMNS:
        return f"{value:.6f}"
    if column in BOOL_COLUMNS:
        return "true" if value else "false"
    return str(value)


def decode_cell(column: str, cell: Optional[str]) -> Any:
    if cell is None:
        return None
    if column in INT_COLUMNS:
        return int(cell) if cell != "" else None
    if column in TS_COLUMNS:
        return parse_ts(cell) if cell != "" else None
    if column in JSON_COLUMNS:
        return json.loads(cell) if cell != "" else None
    if column in FLOAT_COLUMNS:
        return float(cell) if cell != "" else None
    if column in BOOL_COLUMNS:
        return cell.strip().lower() in ("true", "1") if cell != "" else None
    return cell


def write_table(path: str | Path, rows: Iterable[dict], columns: list[str]) -> int:
    n = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([encode_cell(c, row.get(c)) for c in columns])
            n += 1
    return n


def read_table(path: str | Path) -> tuple[list[str], list[dict]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            columns = next(reader)
        except StopIteration:
            return [], []
        rows = []
        for cells in reader:
            if not cells:
                continue
            rows.append({c: decode_cell(c, v) for c, v in zip(columns, cells)})
    return columns, rows
