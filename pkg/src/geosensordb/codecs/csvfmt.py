"""CSV encoding of result sets (the default ASCII delivery path)."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from datetime import datetime

from ..model import (
    Circle,
    GeomVal,
    Point,
    SummaryStats,
    format_number,
    format_timestamp,
    point_to_wkt,
)


@dataclass(frozen=True)
class EncodedPayload:
    media_type: str
    data: bytes


def _render(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return format_number(value)
    if isinstance(value, str):
        return value
    if isinstance(value, bytes):
        return value.hex()
    if isinstance(value, datetime):
        return format_timestamp(value)
    if isinstance(value, Point):
        return point_to_wkt(value)
    if isinstance(value, Circle):
        return f"CIRCLE({format_number(value.center.x)} {format_number(value.center.y)}, {format_number(value.radius)})"
    if isinstance(value, GeomVal):
        return f"({point_to_wkt(value.geom)},{format_number(value.val)})"
    if isinstance(value, SummaryStats):
        parts = (value.field(f) for f in SummaryStats._FIELDS)
        return "(" + ",".join("" if p is None else format_number(p) for p in parts) + ")"
    return str(value)


def encode_csv(result_set) -> EncodedPayload:
    """Header plus one RFC 4180 line per row, CRLF-terminated, UTF-8."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(result_set.column_names)
    for row in result_set.rows:
        writer.writerow(_render(v) for v in row)
    return EncodedPayload("text/csv", buf.getvalue().encode("utf-8"))
