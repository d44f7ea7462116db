"""Render an AST back to query text.

``parse(to_sql(parse(q)))`` is structurally identical to ``parse(q)``;
parentheses are emitted wherever precedence requires them.
"""

from __future__ import annotations

from ..model import format_number
from .ast import (
    BinaryOp,
    ColumnRef,
    Expr,
    FieldAccess,
    FuncCall,
    IsNull,
    NumberLit,
    Query,
    SelectItem,
    StringLit,
    SubqueryRef,
    TableRef,
    UnaryNeg,
)

_PRECEDENCE = {"=": 1, "&&": 1, "+": 2, "-": 2, "*": 3, "/": 3}
_UNARY_PREC = 4


def _prec(expr: Expr) -> int:
    if isinstance(expr, BinaryOp):
        return _PRECEDENCE[expr.op]
    if isinstance(expr, IsNull):
        return 1
    if isinstance(expr, UnaryNeg):
        return _UNARY_PREC
    return 9


def expr_to_sql(expr: Expr) -> str:
    if isinstance(expr, NumberLit):
        return format_number(expr.value)
    if isinstance(expr, StringLit):
        return "'" + expr.value + "'"
    if isinstance(expr, ColumnRef):
        return f"{expr.qualifier}.{expr.name}" if expr.qualifier else expr.name
    if isinstance(expr, FieldAccess):
        return f"({expr_to_sql(expr.base)}).{expr.field}"
    if isinstance(expr, FuncCall):
        return expr.name + "(" + ", ".join(expr_to_sql(a) for a in expr.args) + ")"
    if isinstance(expr, UnaryNeg):
        inner = expr_to_sql(expr.operand)
        # Nested negation needs parens: a bare "--" would start a comment.
        if _prec(expr.operand) < _UNARY_PREC or isinstance(expr.operand, UnaryNeg):
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(expr, IsNull):
        inner = expr_to_sql(expr.operand)
        if _prec(expr.operand) <= 1:
            inner = f"({inner})"
        return f"{inner} IS {'NOT ' if expr.negated else ''}NULL"
    if isinstance(expr, BinaryOp):
        prec = _PRECEDENCE[expr.op]
        left = expr_to_sql(expr.left)
        if _prec(expr.left) < prec:
            left = f"({left})"
        right = expr_to_sql(expr.right)
        # Right operand needs parens at equal precedence (left associativity).
        if _prec(expr.right) <= prec:
            right = f"({right})"
        return f"{left} {expr.op} {right}"
    raise TypeError(f"cannot print {type(expr).__name__}")


def _item_to_sql(item: SelectItem) -> str:
    text = expr_to_sql(item.expr)
    return f"{text} AS {item.alias}" if item.alias else text


def to_sql(query: Query) -> str:
    parts = ["SELECT " + ", ".join(_item_to_sql(i) for i in query.select_items)]
    if query.from_items:
        rendered = []
        for f in query.from_items:
            if isinstance(f, TableRef):
                rendered.append(f"{f.name} AS {f.alias}" if f.alias else f.name)
            elif isinstance(f, SubqueryRef):
                rendered.append(f"({to_sql(f.query)}) AS {f.alias}")
        parts.append("FROM " + ", ".join(rendered))
    if query.where:
        parts.append("WHERE " + " AND ".join(expr_to_sql(e) for e in query.where))
    if query.order_by is not None:
        parts.append("ORDER BY " + expr_to_sql(query.order_by)
                     + (" DESC" if query.order_desc else " ASC"))
    if query.limit is not None:
        parts.append(f"LIMIT {query.limit}")
    return " ".join(parts)
