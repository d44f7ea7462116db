"""Point-observation tables with an R-tree index per table.

Rows are persisted append-only as JSON lines (``tables/<name>.rows``):
field names are the schema columns, geometry is WKT, timestamps are
RFC 3339.  The index is rebuilt when a store is opened.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

from .errors import (
    DuplicateKey,
    DuplicateName,
    InvalidSchema,
    SridMismatch,
    TypeMismatch,
    UnknownTable,
)
from .model import (
    Envelope,
    Point,
    format_number,
    format_timestamp,
    parse_timestamp,
    point_from_wkt,
    point_to_wkt,
)
from .rtree import RTree

COLUMN_TYPES = ("number", "text", "timestamp", "geometry")


@dataclass(frozen=True)
class TableSchema:
    name: str
    srid: int
    columns: tuple[tuple[str, str], ...]
    key_column: str

    def __post_init__(self):
        names = [c for c, _ in self.columns]
        if len(set(names)) != len(names):
            raise InvalidSchema(f"duplicate column names in {self.name!r}")
        for cname, ctype in self.columns:
            if ctype not in COLUMN_TYPES:
                raise InvalidSchema(f"column {cname!r} has unknown type {ctype!r}")
        geom_cols = [c for c, t in self.columns if t == "geometry"]
        if len(geom_cols) != 1:
            raise InvalidSchema(
                f"table {self.name!r} must have exactly one geometry column, "
                f"found {len(geom_cols)}"
            )
        if not any(t != "geometry" for _, t in self.columns):
            raise InvalidSchema(f"table {self.name!r} needs a non-geometry value column")
        if self.key_column not in names:
            raise InvalidSchema(f"key column {self.key_column!r} not in schema")
        if dict(self.columns)[self.key_column] != "number":
            raise InvalidSchema(f"key column {self.key_column!r} must be numeric")
        if self.srid <= 0:
            raise InvalidSchema(f"srid must be positive, got {self.srid}")

    @property
    def geometry_column(self) -> str:
        return next(c for c, t in self.columns if t == "geometry")

    @property
    def column_names(self) -> list[str]:
        return [c for c, _ in self.columns]

    def column_type(self, name: str) -> str:
        for cname, ctype in self.columns:
            if cname == name:
                return ctype
        raise KeyError(name)


def check_value(schema: TableSchema, column: str, value):
    """Validate one cell against its declared column type; returns the value
    (numbers normalized to float)."""
    ctype = schema.column_type(column)
    if value is None:
        if ctype == "geometry":
            raise TypeMismatch(f"column {column!r}: geometry must not be null")
        return None
    if ctype == "number":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TypeMismatch(f"column {column!r}: expected number, got {type(value).__name__}")
        if math.isnan(value):
            raise TypeMismatch(f"column {column!r}: NaN cannot be stored")
        return float(value)
    if ctype == "text":
        if not isinstance(value, str):
            raise TypeMismatch(f"column {column!r}: expected text, got {type(value).__name__}")
        return value
    if ctype == "timestamp":
        if not isinstance(value, datetime):
            raise TypeMismatch(f"column {column!r}: expected timestamp, got {type(value).__name__}")
        return value
    if not isinstance(value, Point):
        raise TypeMismatch(f"column {column!r}: expected point geometry, got {type(value).__name__}")
    if value.srid != schema.srid:
        raise SridMismatch(f"column {column!r}: point srid {value.srid} != table srid {schema.srid}")
    return value


class _Table:
    def __init__(self, schema: TableSchema):
        self.schema = schema
        self.rows: dict[float, list] = {}
        self.index = RTree()


class VectorStore:
    """Table catalog + per-table row storage and spatial index."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self._tables: dict[str, _Table] = {}
        self._lock = threading.RLock()

    def tables(self) -> list[TableSchema]:
        return sorted((t.schema for t in self._tables.values()), key=lambda s: s.name)

    def has_table(self, name: str) -> bool:
        return name in self._tables

    def get_schema(self, name: str) -> TableSchema:
        return self._table(name).schema

    def row_count(self, name: str) -> int:
        return len(self._table(name).rows)

    def _table(self, name: str) -> _Table:
        try:
            return self._tables[name]
        except KeyError:
            raise UnknownTable(f"no table named {name!r}") from None

    def create_table(self, schema: TableSchema) -> None:
        with self._lock:
            if schema.name in self._tables:
                raise DuplicateName(f"table {schema.name!r} already exists")
            self._tables[schema.name] = _Table(schema)

    def register_loaded(self, schema: TableSchema) -> None:
        """Install a schema read back from the catalog and replay its row
        file, rebuilding the index."""
        table = _Table(schema)
        self._tables[schema.name] = table
        path = self._rows_path(schema.name)
        if path.exists():
            with path.open(encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        self._install(table, _row_from_json(schema, json.loads(line)))

    def insert_row(self, name: str, values: list) -> float:
        """Validate, persist, and index one row; returns its key."""
        table = self._table(name)
        schema = table.schema
        if len(values) != len(schema.columns):
            raise TypeMismatch(
                f"expected {len(schema.columns)} values, got {len(values)}"
            )
        checked = [check_value(schema, cname, v)
                   for (cname, _), v in zip(schema.columns, values)]
        key = checked[schema.column_names.index(schema.key_column)]
        if key is None:
            raise TypeMismatch(f"key column {schema.key_column!r} must not be null")
        with self._lock:
            if key in table.rows:
                raise DuplicateKey(f"key {format_number(key)} already in {name!r}")
            path = self._rows_path(name)
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(_row_to_json(schema, checked)) + "\n")
            self._install(table, checked)
        return key

    def _install(self, table: _Table, values: list) -> None:
        schema = table.schema
        key = values[schema.column_names.index(schema.key_column)]
        p = values[schema.column_names.index(schema.geometry_column)]
        table.rows[key] = values
        table.index.insert((p.x, p.y, p.x, p.y), key)

    def get_by_key(self, name: str, key: float) -> list | None:
        return self._table(name).rows.get(float(key))

    def all_rows(self, name: str) -> list[list]:
        return list(self._table(name).rows.values())

    def query_bbox(self, name: str, env: Envelope) -> list[list]:
        """Rows whose point lies inside the closed envelope, via the index."""
        table = self._table(name)
        if env.srid != table.schema.srid:
            raise SridMismatch(
                f"envelope srid {env.srid} != table srid {table.schema.srid}"
            )
        gi = table.schema.column_names.index(table.schema.geometry_column)
        out = []
        for key in table.index.search((env.min_x, env.min_y, env.max_x, env.max_y)):
            row = table.rows[key]
            p = row[gi]
            if env.min_x <= p.x <= env.max_x and env.min_y <= p.y <= env.max_y:
                out.append(row)
        return out

    def index_of(self, name: str) -> RTree:
        return self._table(name).index

    def _rows_path(self, name: str) -> Path:
        return self.root / "tables" / f"{name}.rows"


def _row_to_json(schema: TableSchema, values: list) -> dict:
    doc = {}
    for (cname, ctype), v in zip(schema.columns, values):
        if v is None:
            doc[cname] = None
        elif ctype == "geometry":
            doc[cname] = point_to_wkt(v)
        elif ctype == "timestamp":
            doc[cname] = format_timestamp(v)
        else:
            doc[cname] = v
    return doc


def _row_from_json(schema: TableSchema, doc: dict) -> list:
    values = []
    for cname, ctype in schema.columns:
        v = doc.get(cname)
        if v is None:
            values.append(None)
        elif ctype == "geometry":
            values.append(point_from_wkt(v, schema.srid))
        elif ctype == "timestamp":
            values.append(parse_timestamp(v))
        elif ctype == "number":
            values.append(float(v))
        else:
            values.append(v)
    return values
