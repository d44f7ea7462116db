"""Plan execution against the stores.

Null semantics: null propagates through arithmetic, predicates treat null
as false, division by zero yields null, and NaN is converted to null
before a value reaches a result set.  ``ST_Intersection`` with no overlap
yields an empty marker that drops the row at projection time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime

from .. import algebra
from ..errors import (
    GeoSensorError,
    LexError,
    ParseError,
    QueryRuntimeError,
    TypeMismatch,
)
from ..model import (
    Circle,
    Envelope,
    GeomVal,
    Point,
    SummaryStats,
    envelope_of,
    envelopes_overlap,
    point_to_wkb,
    point_to_wkt,
)
from ..rasterstore import world_to_cell
from .ast import BinaryOp, FieldAccess, FuncCall, IsNull, NumberLit, StringLit, UnaryNeg
from .lexer import tokenize
from .parser import parse
from .planner import (
    BoundRef,
    Filter,
    IndexScanTable,
    LimitNode,
    NestedLoopJoin,
    Project,
    RasterTileScan,
    SeqScanTable,
    Sort,
    SubqueryScan,
    plan,
)


@dataclass(frozen=True)
class RasterRef:
    """A raster operand inside a query: one tile of one band."""

    coverage: str
    band: int
    tile: tuple[int, int]


class _EmptyType:
    """Result of a non-intersecting ST_Intersection; drops its row."""

    __slots__ = ()

    def __repr__(self):
        return "EMPTY"


EMPTY = _EmptyType()


@dataclass
class ResultSet:
    columns: list[tuple[str, str]]
    rows: list[list]
    format_tag: str = "csv"

    @property
    def column_names(self) -> list[str]:
        return [n for n, _ in self.columns]


def run_query(db, text: str, use_spatial_index: bool = True) -> ResultSet:
    """Parse, plan, and execute a query string."""
    query = parse(tokenize(text))
    return execute(plan(query, db, use_spatial_index=use_spatial_index), db)


def execute(project: Project, db) -> ResultSet:
    names = list(project.names)
    rows = []
    if project.child is None:
        envs = [{}]
    else:
        envs = _iterate(project.child, db)
    for env in envs:
        out = []
        drop = False
        for expr in project.exprs:
            v = _eval(expr, env, db)
            if v is EMPTY:
                drop = True
                break
            if isinstance(v, float) and math.isnan(v):
                v = None
            out.append(v)
        if not drop:
            rows.append(out)
    types = [_infer_type(rows, i) for i in range(len(names))]
    return ResultSet(list(zip(names, types)), rows, project.format_tag)


# -- row iteration ---------------------------------------------------------


def _iterate(node, db):
    if isinstance(node, SeqScanTable):
        yield from _scan_vector(node, db)
    elif isinstance(node, RasterTileScan):
        yield from _scan_raster(node, db)
    elif isinstance(node, SubqueryScan):
        rs = execute(node.plan, db)
        for row in rs.rows:
            yield {node.item: dict(zip(rs.column_names, row))}
    elif isinstance(node, Filter):
        for env in _iterate(node.child, db):
            if _passes(node.predicates, env, db):
                yield env
    elif isinstance(node, NestedLoopJoin):
        yield from _join(node, db)
    elif isinstance(node, Sort):
        envs = list(_iterate(node.child, db))
        envs.sort(key=lambda env: _sort_key(_eval(node.key, env, db)),
                  reverse=node.descending)
        yield from envs
    elif isinstance(node, LimitNode):
        for i, env in enumerate(_iterate(node.child, db)):
            if i >= node.count:
                break
            yield env
    else:
        raise TypeError(f"cannot execute {type(node).__name__}")


def _scan_vector(node: SeqScanTable, db):
    schema = db.vectors.get_schema(node.table)
    names = schema.column_names
    for row in db.vectors.all_rows(node.table):
        env = {node.item: dict(zip(names, row))}
        if _passes(node.filters, env, db):
            yield env


def _scan_raster(node: RasterTileScan, db):
    for tc, tr in db.rasters.written_tiles(node.coverage, node.band):
        env = {node.item: {"rast": RasterRef(node.coverage, node.band, (tc, tr))}}
        if _passes(node.filters, env, db):
            yield env


def _join(node: NestedLoopJoin, db):
    if node.strategy == "tile-probe":
        # Outer rows are few (key-filtered); probe the tiling grid per point.
        raster = node.inner
        assert isinstance(raster, RasterTileScan)
        written = set(db.rasters.written_tiles(raster.coverage, raster.band))
        for outer_env in _iterate(node.outer, db):
            geom = _geometry_of(outer_env)
            if geom is None:
                continue
            tiles = db.rasters.tiles_overlapping(
                raster.coverage, raster.band, envelope_of(geom))
            for tile in tiles:
                if tile not in written:
                    continue
                env = dict(outer_env)
                env[raster.item] = {
                    "rast": RasterRef(raster.coverage, raster.band, tile)}
                if _passes(raster.filters, env, db) \
                        and _passes(node.predicates, env, db):
                    yield env
    elif node.strategy == "rtree-probe":
        index_scan = node.inner
        assert isinstance(index_scan, IndexScanTable)
        schema = db.vectors.get_schema(index_scan.table)
        names = schema.column_names
        for outer_env in _iterate(node.outer, db):
            ref = next(iter(outer_env.values()))["rast"]
            meta = db.rasters.get_meta(ref.coverage)
            fp = meta.tile_footprint(*ref.tile)
            for row in db.vectors.query_bbox(index_scan.table, fp):
                env = dict(outer_env)
                env[index_scan.item] = dict(zip(names, row))
                if _passes(index_scan.filters, env, db) \
                        and _passes(node.predicates, env, db):
                    yield env
    else:
        inner_envs = list(_iterate(node.inner, db))
        for outer_env in _iterate(node.outer, db):
            for inner_env in inner_envs:
                env = dict(outer_env)
                env.update(inner_env)
                if _passes(node.predicates, env, db):
                    yield env


def _geometry_of(env):
    for rowdict in env.values():
        for v in rowdict.values():
            if isinstance(v, (Point, Circle)):
                return v
    return None


def _passes(predicates, env, db) -> bool:
    for pred in predicates:
        v = _eval(pred, env, db)
        if v is None or v is EMPTY or v is False:
            return False
        if v is not True:
            raise TypeMismatch(
                f"predicate evaluated to {type(v).__name__}, expected boolean")
    return True


def _sort_key(value):
    if value is None or value is EMPTY:
        return (0, 0)
    if isinstance(value, SummaryStats):  # composites order by first field
        value = value.count
    elif isinstance(value, GeomVal):
        value = (value.geom.x, value.geom.y)
    elif isinstance(value, Point):
        value = (value.x, value.y)
    return (1, value)


def _infer_type(rows, i) -> str:
    for row in rows:
        v = row[i]
        if v is None:
            continue
        if isinstance(v, bool):
            return "boolean"
        if isinstance(v, float):
            return "number"
        if isinstance(v, str):
            return "text"
        if isinstance(v, datetime):
            return "timestamp"
        if isinstance(v, (Point, Circle)):
            return "geometry"
        if isinstance(v, GeomVal):
            return "geomval"
        if isinstance(v, SummaryStats):
            return "summarystats"
        if isinstance(v, bytes):
            return "bytes"
        if isinstance(v, RasterRef):
            return "raster"
    return "unknown"


# -- expression evaluation -------------------------------------------------


def _eval(expr, env, db):
    if isinstance(expr, NumberLit):
        return expr.value
    if isinstance(expr, StringLit):
        return expr.value
    if isinstance(expr, BoundRef):
        return env[expr.item][expr.name]
    if isinstance(expr, FieldAccess):
        base = _eval(expr.base, env, db)
        if base is None or base is EMPTY:
            return base
        if isinstance(base, (GeomVal, SummaryStats)):
            try:
                return base.field(expr.field)
            except KeyError:
                raise TypeMismatch(
                    f"{type(base).__name__} has no field {expr.field!r}") from None
        raise TypeMismatch(
            f"cannot project field {expr.field!r} from {_type_name(base)}")
    if isinstance(expr, UnaryNeg):
        v = _eval(expr.operand, env, db)
        if v is None or v is EMPTY:
            return None
        return -_require_number(v, "-")
    if isinstance(expr, IsNull):
        v = _eval(expr.operand, env, db)
        null = v is None or v is EMPTY
        return (not null) if expr.negated else null
    if isinstance(expr, BinaryOp):
        return _eval_binary(expr, env, db)
    if isinstance(expr, FuncCall):
        try:
            return _eval_func(expr, env, db)
        except QueryRuntimeError:
            raise
        except GeoSensorError as exc:
            raise QueryRuntimeError(str(exc), position=expr.pos) from exc
    raise TypeError(f"cannot evaluate {type(expr).__name__}")


def _type_name(v) -> str:
    if isinstance(v, float):
        return "number"
    if isinstance(v, str):
        return "text"
    return type(v).__name__


def _require_number(v, op: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeMismatch(f"operator {op} expects numbers, got {_type_name(v)}")
    return float(v)


def _eval_binary(expr: BinaryOp, env, db):
    left = _eval(expr.left, env, db)
    right = _eval(expr.right, env, db)
    if left is None or right is None or left is EMPTY or right is EMPTY:
        return None
    op = expr.op
    if op == "=":
        if isinstance(left, float) and isinstance(right, float):
            return left == right
        if type(left) is type(right):
            return left == right
        raise TypeMismatch(
            f"operator = cannot compare {_type_name(left)} and {_type_name(right)}")
    if op == "&&":
        return envelopes_overlap(_operand_envelope(left, db),
                                 _operand_envelope(right, db))
    a = _require_number(left, op)
    b = _require_number(right, op)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if b == 0.0:
        return None  # division by zero follows the null-propagation rule
    return a / b


def _operand_envelope(v, db) -> Envelope:
    if isinstance(v, RasterRef):
        meta = db.rasters.get_meta(v.coverage)
        return meta.tile_footprint(*v.tile)
    if isinstance(v, (Point, Circle, Envelope)):
        return envelope_of(v)
    raise TypeMismatch(f"operator && expects spatial operands, got {_type_name(v)}")


def _split_raster_geom(name, a, b):
    if isinstance(a, RasterRef) and isinstance(b, Point):
        return a, b
    if isinstance(b, RasterRef) and isinstance(a, Point):
        return b, a
    raise TypeMismatch(
        f"{name} expects a raster and a point, got "
        f"{_type_name(a)} and {_type_name(b)}")


def _tile_value(db, ref: RasterRef, p: Point) -> float | None:
    """Cell value under p restricted to the referenced tile (half-open
    cell ownership keeps tile results disjoint)."""
    meta = db.rasters.get_meta(ref.coverage)
    if p.srid != meta.srid:
        from ..errors import SridMismatch
        raise SridMismatch(f"point srid {p.srid} != coverage srid {meta.srid}")
    cell = world_to_cell(meta.geotransform, p, meta.width, meta.height)
    if cell is None:
        return None
    col, row = cell
    ts = meta.tile_size
    if (col // ts, row // ts) != ref.tile:
        return None
    return db.rasters.read_cell(ref.coverage, ref.band, col, row)


def _eval_func(expr: FuncCall, env, db):
    name = expr.name
    args = [_eval(a, env, db) for a in expr.args]
    if any(a is EMPTY for a in args):
        return None
    if name == "POW":
        if any(a is None for a in args):
            return None
        try:
            return math.pow(_require_number(args[0], "pow"),
                            _require_number(args[1], "pow"))
        except (ValueError, OverflowError):
            # Domain errors (pow(-1, 0.5)) and overflow surface as null,
            # matching the division-by-zero rule.
            return None
    if name == "ST_BUFFER":
        if any(a is None for a in args):
            return None
        geom, radius = args
        if not isinstance(geom, Point):
            raise TypeMismatch(f"ST_Buffer expects a point, got {_type_name(geom)}")
        return Circle(geom, _require_number(radius, "ST_Buffer"))
    if name == "ST_ASBINARY":
        if args[0] is None:
            return None
        if not isinstance(args[0], Point):
            raise TypeMismatch(
                f"ST_AsBinary supports points only, got {_type_name(args[0])}")
        return point_to_wkb(args[0])
    if name == "ST_ASTEXT":
        if args[0] is None:
            return None
        if not isinstance(args[0], Point):
            raise TypeMismatch(
                f"ST_AsText supports points only, got {_type_name(args[0])}")
        return point_to_wkt(args[0])
    if name in ("ST_ASGEOTIFF", "ST_ASPNG"):
        if not isinstance(args[0], RasterRef):
            raise TypeMismatch(f"{name} expects a raster column")
        return args[0]  # payload encoding happens at delivery time
    if name == "ST_ASGML":
        if args[0] is None:
            return None
        if not isinstance(args[0], (Point, Circle)):
            raise TypeMismatch(f"ST_AsGML expects a geometry")
        return args[0]
    if name == "ST_VALUE":
        if any(a is None for a in args):
            return None
        ref, p = _split_raster_geom("ST_Value", *args)
        return _tile_value(db, ref, p)
    if name == "ST_INTERSECTS":
        if any(a is None for a in args):
            return None
        ref, p = _split_raster_geom("ST_Intersects", *args)
        return _tile_value(db, ref, p) is not None
    if name == "ST_INTERSECTION":
        if any(a is None for a in args):
            return EMPTY
        ref, p = _split_raster_geom("ST_Intersection", *args)
        v = _tile_value(db, ref, p)
        if v is None:
            return EMPTY
        return GeomVal(geom=p, val=v)
    if name == "ST_SUMMARYSTATS":
        if not isinstance(args[0], RasterRef):
            raise TypeMismatch("ST_SummaryStats expects a raster column")
        ref = args[0]
        return algebra.st_summary_stats(db.rasters, ref.coverage, ref.band, ref.tile)
    raise TypeMismatch(f"unhandled function {name}")


# Re-exported for API completeness: tokenizing/parsing errors carry offsets.
__all__ = ["ResultSet", "execute", "run_query", "RasterRef", "EMPTY",
           "LexError", "ParseError"]
