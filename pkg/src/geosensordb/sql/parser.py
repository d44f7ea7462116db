"""Recursive-descent parser producing the AST in ``ast.py``.

Grammar (keywords case-insensitive):

    query  := SELECT sel_item (',' sel_item)* FROM from_item (',' from_item)*
              [WHERE pred (AND pred)*] [ORDER BY expr [ASC|DESC]]
              [LIMIT int] [';']
    sel_item  := expr [[AS] ident]
    from_item := ident [[AS] ident] | '(' query ')' [AS] ident
    expr      := cmp ; cmp := add (('=' | '&&') add | IS [NOT] NULL)*
    add       := mul (('+'|'-') mul)* ; mul := unary (('*'|'/') unary)*
    unary     := '-' unary | postfix
    postfix   := primary ['.' ident]          (field access after parens)
    primary   := number | string | ident['.'ident] | ident '(' args ')'
               | '(' expr ')'

A FROM clause is optional so constant queries like ``SELECT 1+2`` work.
"""

from __future__ import annotations

from ..errors import ParseError
from .ast import (
    BinaryOp,
    ColumnRef,
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
from .lexer import Token, tokenize


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    # -- token helpers ----------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def at_keyword(self, *words) -> bool:
        tok = self.peek()
        return tok.kind == "keyword" and tok.value in words

    def at_op(self, *ops) -> bool:
        tok = self.peek()
        return tok.kind == "op" and tok.value in ops

    def accept_keyword(self, word) -> bool:
        if self.at_keyword(word):
            self.advance()
            return True
        return False

    def accept_op(self, op) -> bool:
        if self.at_op(op):
            self.advance()
            return True
        return False

    def expect_keyword(self, word) -> Token:
        if not self.at_keyword(word):
            self.fail(f"expected {word}", [word])
        return self.advance()

    def expect_op(self, op) -> Token:
        if not self.at_op(op):
            self.fail(f"expected {op!r}", [op])
        return self.advance()

    def expect_ident(self, what="identifier") -> Token:
        if self.peek().kind != "ident":
            self.fail(f"expected {what}", ["<identifier>"])
        return self.advance()

    def fail(self, message, expected=()):
        tok = self.peek()
        shown = tok.value if tok.kind != "eof" else "end of input"
        raise ParseError(f"{message}, found {shown!r}", tok.pos, expected)

    # -- grammar ----------------------------------------------------------

    def parse_query(self) -> Query:
        self.expect_keyword("SELECT")
        if self.at_keyword("FROM"):
            self.fail("empty select list", ["<expression>"])
        items = [self.parse_select_item()]
        while self.accept_op(","):
            items.append(self.parse_select_item())
        from_items = []
        if self.accept_keyword("FROM"):
            from_items.append(self.parse_from_item())
            while self.accept_op(","):
                from_items.append(self.parse_from_item())
        where = []
        if self.accept_keyword("WHERE"):
            where.append(self.parse_expr())
            while self.accept_keyword("AND"):
                where.append(self.parse_expr())
        order_by, order_desc = None, False
        if self.accept_keyword("ORDER"):
            self.expect_keyword("BY")
            order_by = self.parse_expr()
            if self.accept_keyword("DESC"):
                order_desc = True
            else:
                self.accept_keyword("ASC")
        limit = None
        if self.accept_keyword("LIMIT"):
            tok = self.peek()
            if tok.kind != "number" or not float(tok.value).is_integer() or float(tok.value) < 0:
                self.fail("expected non-negative integer after LIMIT", ["<integer>"])
            limit = int(float(self.advance().value))
        return Query(tuple(items), tuple(from_items), tuple(where),
                     order_by, order_desc, limit)

    def parse_select_item(self) -> SelectItem:
        expr = self.parse_expr()
        alias = None
        if self.accept_keyword("AS"):
            alias = self.expect_ident("alias").value
        elif self.peek().kind == "ident":
            alias = self.advance().value
        return SelectItem(expr, alias)

    def parse_from_item(self):
        if self.accept_op("("):
            query = self.parse_query()
            self.expect_op(")")
            self.accept_keyword("AS")
            alias = self.expect_ident("subquery alias").value
            return SubqueryRef(query, alias)
        name = self.expect_ident("table name").value
        alias = None
        if self.accept_keyword("AS"):
            alias = self.expect_ident("alias").value
        elif self.peek().kind == "ident":
            alias = self.advance().value
        return TableRef(name, alias)

    def parse_expr(self):
        return self.parse_cmp()

    def parse_cmp(self):
        left = self.parse_add()
        while True:
            pos = self.peek().pos
            if self.at_op("=", "&&"):
                op = self.advance().value
                left = BinaryOp(op, left, self.parse_add(), pos)
            elif self.at_keyword("IS"):
                self.advance()
                negated = self.accept_keyword("NOT")
                self.expect_keyword("NULL")
                left = IsNull(left, negated, pos)
            else:
                return left

    def parse_add(self):
        left = self.parse_mul()
        while self.at_op("+", "-"):
            pos = self.peek().pos
            op = self.advance().value
            left = BinaryOp(op, left, self.parse_mul(), pos)
        return left

    def parse_mul(self):
        left = self.parse_unary()
        while self.at_op("*", "/"):
            pos = self.peek().pos
            op = self.advance().value
            left = BinaryOp(op, left, self.parse_unary(), pos)
        return left

    def parse_unary(self):
        if self.at_op("-"):
            pos = self.advance().pos
            return UnaryNeg(self.parse_unary(), pos)
        return self.parse_postfix()

    def parse_postfix(self):
        tok = self.peek()
        was_paren = tok.kind == "op" and tok.value == "("
        expr = self.parse_primary()
        if was_paren and self.at_op("."):
            pos = self.advance().pos
            field = self.expect_ident("composite field").value
            expr = FieldAccess(expr, field, pos)
        return expr

    def parse_primary(self):
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            return NumberLit(float(tok.value), tok.pos)
        if tok.kind == "string":
            self.advance()
            return StringLit(tok.value, tok.pos)
        if tok.kind == "ident":
            self.advance()
            if self.at_op("("):
                self.advance()
                args = []
                if not self.at_op(")"):
                    args.append(self.parse_expr())
                    while self.accept_op(","):
                        args.append(self.parse_expr())
                self.expect_op(")")
                return FuncCall(tok.value.upper(), tuple(args), tok.pos)
            if self.at_op("."):
                self.advance()
                col = self.expect_ident("column name")
                return ColumnRef(col.value, tok.value, tok.pos)
            return ColumnRef(tok.value, None, tok.pos)
        if self.accept_op("("):
            expr = self.parse_expr()
            self.expect_op(")")
            return expr
        self.fail("expected expression", ["<expression>"])


def parse(tokens: list[Token]) -> Query:
    p = _Parser(tokens)
    query = p.parse_query()
    p.accept_op(";")
    if p.peek().kind != "eof":
        p.fail("trailing input after statement")
    return query


def parse_query(text: str) -> Query:
    return parse(tokenize(text))
