"""AST node types for the query language."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class NumberLit(Expr):
    value: float
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class StringLit(Expr):
    value: str
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ColumnRef(Expr):
    name: str
    qualifier: str | None = None
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class FieldAccess(Expr):
    """Composite projection ``(expr).field``."""

    base: Expr
    field: str
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class FuncCall(Expr):
    name: str  # upper-cased
    args: tuple[Expr, ...]
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BinaryOp(Expr):
    op: str  # one of = && + - * /
    left: Expr
    right: Expr
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class UnaryNeg(Expr):
    operand: Expr
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class IsNull(Expr):
    """``expr IS [NOT] NULL``."""

    operand: Expr
    negated: bool
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class SelectItem:
    expr: Expr
    alias: str | None = None


@dataclass(frozen=True)
class TableRef:
    name: str
    alias: str | None = None


@dataclass(frozen=True)
class SubqueryRef:
    query: "Query"
    alias: str


FromItem = TableRef | SubqueryRef


@dataclass(frozen=True)
class Query:
    select_items: tuple[SelectItem, ...]
    from_items: tuple[FromItem, ...] = ()
    where: tuple[Expr, ...] = ()  # implicit conjunction
    order_by: Expr | None = None
    order_desc: bool = False
    limit: int | None = None


def walk(expr: Expr):
    """Yield every node of an expression tree, preorder."""
    yield expr
    if isinstance(expr, FieldAccess):
        yield from walk(expr.base)
    elif isinstance(expr, FuncCall):
        for a in expr.args:
            yield from walk(a)
    elif isinstance(expr, BinaryOp):
        yield from walk(expr.left)
        yield from walk(expr.right)
    elif isinstance(expr, UnaryNeg):
        yield from walk(expr.operand)
    elif isinstance(expr, IsNull):
        yield from walk(expr.operand)
