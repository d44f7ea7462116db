"""Name resolution and plan construction.

Plans are small dataclass trees.  A conjunct of the WHERE clause that
mentions only one FROM item becomes that scan's filter; the rest become
join predicates.  When a spatial conjunct (``&&`` or ``ST_Intersects``)
links a vector geometry column to a raster, the join is index-accelerated:
either probing tiles per vector row (picked when the vector side also has
a key-equality filter) or probing the table's R-tree per tile footprint.
Either way every join predicate is still evaluated on the candidates, so
an accelerated plan returns exactly the rows of a sequential one.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import (
    AmbiguousColumn,
    UnknownColumn,
    UnknownFunction,
    UnknownTable,
)
from .ast import (
    BinaryOp,
    ColumnRef,
    Expr,
    FieldAccess,
    FuncCall,
    IsNull,
    NumberLit,
    Query,
    StringLit,
    SubqueryRef,
    TableRef,
    UnaryNeg,
    walk,
)

BUILTIN_FUNCTIONS = {
    "ST_VALUE": 2,
    "ST_INTERSECTS": 2,
    "ST_INTERSECTION": 2,
    "ST_SUMMARYSTATS": 1,
    "ST_BUFFER": 2,
    "ST_ASBINARY": 1,
    "ST_ASTEXT": 1,
    "ST_ASGEOTIFF": 1,
    "ST_ASPNG": 1,
    "ST_ASGML": 1,
    "POW": 2,
}

# Outermost ST_As* in the select list decides the payload encoding.
_FORMAT_FUNCS = {
    "ST_ASGEOTIFF": "geotiff",
    "ST_ASPNG": "png",
    "ST_ASGML": "gml",
    "ST_ASBINARY": "wkb-inline",
}

DEFAULT_BAND = 1


@dataclass(frozen=True)
class BoundRef(Expr):
    """Column reference resolved to (from-item index, column name)."""

    item: int
    name: str
    pos: int = 0


@dataclass
class SeqScanTable:
    item: int
    table: str
    filters: tuple[Expr, ...] = ()


@dataclass
class RasterTileScan:
    item: int
    coverage: str
    band: int = DEFAULT_BAND
    filters: tuple[Expr, ...] = ()


@dataclass
class SubqueryScan:
    item: int
    plan: "Project"
    columns: tuple[str, ...] = ()


@dataclass
class IndexScanTable:
    """R-tree probe of a vector table, driven by the join's tile envelope."""

    item: int
    table: str
    filters: tuple[Expr, ...] = ()


@dataclass
class NestedLoopJoin:
    outer: object
    inner: object
    predicates: tuple[Expr, ...] = ()
    index_accelerated: bool = False
    strategy: str = "sequential"  # sequential | tile-probe | rtree-probe


@dataclass
class Filter:
    child: object
    predicates: tuple[Expr, ...]


@dataclass
class Sort:
    child: object
    key: Expr
    descending: bool


@dataclass
class LimitNode:
    child: object
    count: int


@dataclass
class Project:
    child: object  # None for FROM-less queries
    exprs: tuple[Expr, ...]
    names: tuple[str, ...]
    format_tag: str = "csv"


@dataclass
class _Source:
    kind: str  # vector | raster | subquery
    name: str
    alias: str | None
    columns: tuple[str, ...]
    schema: object = None
    inner_plan: object = None

    def matches(self, qualifier: str) -> bool:
        return qualifier == (self.alias or self.name)


def _output_name(item) -> str:
    if item.alias:
        return item.alias
    expr = item.expr
    if isinstance(expr, ColumnRef):
        return expr.name
    if isinstance(expr, FieldAccess):
        return expr.field
    if isinstance(expr, FuncCall):
        return expr.name.lower()
    return "?column?"


def _sources(query: Query, db, use_spatial_index: bool) -> list[_Source]:
    sources = []
    for f in query.from_items:
        if isinstance(f, TableRef):
            if db.vectors.has_table(f.name):
                schema = db.vectors.get_schema(f.name)
                sources.append(_Source("vector", f.name, f.alias,
                                       tuple(schema.column_names), schema=schema))
            elif db.rasters.has_coverage(f.name):
                sources.append(_Source("raster", f.name, f.alias, ("rast",),
                                       schema=db.rasters.get_meta(f.name)))
            else:
                raise UnknownTable(f"no table or coverage named {f.name!r}")
        elif isinstance(f, SubqueryRef):
            inner = plan(f.query, db, use_spatial_index=use_spatial_index)
            sources.append(_Source("subquery", f.alias, f.alias, inner.names,
                                   inner_plan=inner))
    return sources


def _bind(expr: Expr, sources: list[_Source]) -> Expr:
    if isinstance(expr, (NumberLit, StringLit, BoundRef)):
        return expr
    if isinstance(expr, ColumnRef):
        if expr.qualifier is not None:
            for i, src in enumerate(sources):
                if src.matches(expr.qualifier):
                    if expr.name not in src.columns:
                        raise UnknownColumn(
                            f"no column {expr.name!r} in {expr.qualifier!r}")
                    return BoundRef(i, expr.name, expr.pos)
            raise UnknownTable(f"unknown alias {expr.qualifier!r}")
        hits = [i for i, src in enumerate(sources) if expr.name in src.columns]
        if not hits:
            raise UnknownColumn(f"no column named {expr.name!r}")
        if len(hits) > 1:
            raise AmbiguousColumn(f"column {expr.name!r} is ambiguous")
        return BoundRef(hits[0], expr.name, expr.pos)
    if isinstance(expr, FieldAccess):
        return FieldAccess(_bind(expr.base, sources), expr.field, expr.pos)
    if isinstance(expr, FuncCall):
        if expr.name not in BUILTIN_FUNCTIONS:
            raise UnknownFunction(f"unknown function {expr.name}")
        if len(expr.args) != BUILTIN_FUNCTIONS[expr.name]:
            raise UnknownFunction(
                f"{expr.name} takes {BUILTIN_FUNCTIONS[expr.name]} arguments, "
                f"got {len(expr.args)}")
        return FuncCall(expr.name, tuple(_bind(a, sources) for a in expr.args),
                        expr.pos)
    if isinstance(expr, BinaryOp):
        return BinaryOp(expr.op, _bind(expr.left, sources),
                        _bind(expr.right, sources), expr.pos)
    if isinstance(expr, UnaryNeg):
        return UnaryNeg(_bind(expr.operand, sources), expr.pos)
    if isinstance(expr, IsNull):
        return IsNull(_bind(expr.operand, sources), expr.negated, expr.pos)
    raise TypeError(f"cannot bind {type(expr).__name__}")


def _items_used(expr: Expr) -> set[int]:
    return {n.item for n in walk(expr) if isinstance(n, BoundRef)}


def _spatial_link(pred: Expr, sources) -> tuple[int, int] | None:
    """(vector item, raster item) when the predicate ties a geometry column
    to a raster column, else None."""
    if isinstance(pred, BinaryOp) and pred.op == "&&":
        operands = (pred.left, pred.right)
    elif isinstance(pred, FuncCall) and pred.name == "ST_INTERSECTS":
        operands = pred.args
    else:
        return None
    vec = ras = None
    for op in operands:
        if not isinstance(op, BoundRef):
            return None
        src = sources[op.item]
        if src.kind == "vector" and op.name == src.schema.geometry_column:
            vec = op.item
        elif src.kind == "raster" and op.name == "rast":
            ras = op.item
    if vec is None or ras is None:
        return None
    return vec, ras


def _key_equality(filters, source: _Source) -> bool:
    key = source.schema.key_column
    for f in filters:
        if isinstance(f, BinaryOp) and f.op == "=":
            sides = (f.left, f.right)
            if any(isinstance(s, BoundRef) and s.name == key for s in sides) \
                    and any(isinstance(s, NumberLit) for s in sides):
                return True
    return False


def _scan_node(i: int, src: _Source, filters) -> object:
    if src.kind == "vector":
        return SeqScanTable(i, src.name, tuple(filters))
    if src.kind == "raster":
        return RasterTileScan(i, src.name, DEFAULT_BAND, tuple(filters))
    node = SubqueryScan(i, src.inner_plan, src.columns)
    return Filter(node, tuple(filters)) if filters else node


def plan(query: Query, db, use_spatial_index: bool = True) -> Project:
    sources = _sources(query, db, use_spatial_index)
    where = [_bind(e, sources) for e in query.where]
    select = [(_bind(item.expr, sources), _output_name(item))
              for item in query.select_items]
    order_key = None
    if query.order_by is not None:
        ob = query.order_by
        # A bare name may refer to a select-list alias (output column).
        if isinstance(ob, ColumnRef) and ob.qualifier is None:
            for expr, name in select:
                if name == ob.name:
                    order_key = expr
                    break
        if order_key is None:
            order_key = _bind(ob, sources)

    scan_filters: dict[int, list[Expr]] = {i: [] for i in range(len(sources))}
    join_preds: list[Expr] = []
    for pred in where:
        used = _items_used(pred)
        if len(used) == 1:
            scan_filters[used.pop()].append(pred)
        else:
            join_preds.append(pred)

    root = None
    if len(sources) == 1:
        root = _scan_node(0, sources[0], scan_filters[0])
        if join_preds:  # zero-item predicates, e.g. WHERE 1 = 1
            root = Filter(root, tuple(join_preds))
    elif sources:
        spatial = None
        if use_spatial_index and len(sources) == 2:
            for pred in join_preds:
                spatial = _spatial_link(pred, sources)
                if spatial:
                    break
        if spatial:
            vec, ras = spatial
            if _key_equality(scan_filters[vec], sources[vec]):
                outer = _scan_node(vec, sources[vec], scan_filters[vec])
                inner = _scan_node(ras, sources[ras], scan_filters[ras])
                strategy = "tile-probe"
            else:
                outer = _scan_node(ras, sources[ras], scan_filters[ras])
                inner = IndexScanTable(vec, sources[vec].name,
                                       tuple(scan_filters[vec]))
                strategy = "rtree-probe"
            root = NestedLoopJoin(outer, inner, tuple(join_preds),
                                  index_accelerated=True, strategy=strategy)
        else:
            root = _scan_node(0, sources[0], scan_filters[0])
            for i in range(1, len(sources)):
                preds = join_preds if i == len(sources) - 1 else ()
                root = NestedLoopJoin(root, _scan_node(i, sources[i], scan_filters[i]),
                                      tuple(preds))
    elif where:
        raise UnknownColumn("WHERE clause requires a FROM clause")

    if order_key is not None:
        root = Sort(root, order_key, query.order_desc)
    if query.limit is not None:
        root = LimitNode(root, query.limit)

    format_tag = "csv"
    for expr, _ in select:
        if isinstance(expr, FuncCall) and expr.name in _FORMAT_FUNCS:
            format_tag = _FORMAT_FUNCS[expr.name]
            break
    return Project(root, tuple(e for e, _ in select),
                   tuple(n for _, n in select), format_tag)


def plan_has_index(node) -> bool:
    """True when any join in the plan is index-accelerated (test helper)."""
    if isinstance(node, Project):
        return node.child is not None and plan_has_index(node.child)
    if isinstance(node, (Sort, LimitNode, Filter)):
        return plan_has_index(node.child)
    if isinstance(node, NestedLoopJoin):
        return node.index_accelerated or plan_has_index(node.outer) \
            or plan_has_index(node.inner)
    if isinstance(node, SubqueryScan):
        return plan_has_index(node.plan)
    return False
