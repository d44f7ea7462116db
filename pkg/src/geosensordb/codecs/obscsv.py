"""Observation CSV ingestion against a table schema.

The geometry column may arrive either as two numeric columns named ``x``
and ``y`` or as a single WKT column named like the schema's geometry
column; timestamps are RFC 3339.
"""

from __future__ import annotations

import csv
import io

from ..errors import HeaderMismatch, RowError
from ..model import Point, parse_timestamp, point_from_wkt
from ..vectorstore import TableSchema


def parse_obs_csv(text: str, schema: TableSchema):
    """Returns (rows, rejects): typed rows ready for insertion plus
    RowError diagnostics for lines that failed."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise HeaderMismatch("empty file") from None
    header = [h.strip() for h in header]
    geom_col = schema.geometry_column
    other = [c for c in schema.column_names if c != geom_col]

    if set(header) == set(other) | {"x", "y"}:
        split_geometry = True
    elif set(header) == set(schema.column_names):
        split_geometry = False
    else:
        raise HeaderMismatch(
            f"header {header} does not match schema columns "
            f"{schema.column_names} (geometry as {geom_col!r} WKT or x,y)")

    rows, rejects = [], []
    for lineno, record in enumerate(reader, start=2):
        if not record or all(not f.strip() for f in record):
            continue
        if len(record) != len(header):
            rejects.append(RowError(lineno, "", f"expected {len(header)} fields, got {len(record)}"))
            continue
        fields = dict(zip(header, (f.strip() for f in record)))
        try:
            values = []
            for cname, ctype in schema.columns:
                if ctype == "geometry":
                    values.append(_parse_geometry(fields, cname, split_geometry,
                                                  schema.srid, lineno))
                    continue
                raw = fields[cname]
                if raw == "":
                    values.append(None)
                elif ctype == "number":
                    try:
                        values.append(float(raw))
                    except ValueError:
                        raise RowError(lineno, cname, f"not a number: {raw!r}") from None
                elif ctype == "timestamp":
                    try:
                        values.append(parse_timestamp(raw))
                    except ValueError:
                        raise RowError(lineno, cname, f"not a timestamp: {raw!r}") from None
                else:
                    values.append(raw)
            rows.append(values)
        except RowError as exc:
            rejects.append(exc)
    return rows, rejects


def _parse_geometry(fields, cname, split_geometry, srid, lineno):
    if split_geometry:
        try:
            return Point(float(fields["x"]), float(fields["y"]), srid)
        except ValueError as exc:
            raise RowError(lineno, cname, str(exc)) from None
    try:
        return point_from_wkt(fields[cname], srid)
    except ValueError as exc:
        raise RowError(lineno, cname, str(exc)) from None
