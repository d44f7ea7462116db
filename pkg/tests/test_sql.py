import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geosensordb.errors import LexError, ParseError
from geosensordb.sql import parse_query, to_sql, tokenize
from geosensordb.sql.ast import (
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

from conftest import SAMPLE_QUERIES, QUERY_TEMP_DIFF, QUERY_AET


# -- tokenizer ----------------------------------------------------------------

def kinds_values(text):
    return [(t.kind, t.value) for t in tokenize(text)]


def test_tokenize_basics():
    assert kinds_values("SELECT x FROM t;") == [
        ("keyword", "SELECT"), ("ident", "x"), ("keyword", "FROM"),
        ("ident", "t"), ("op", ";"), ("eof", "")]


def test_tokenize_case_and_comments():
    toks = tokenize("select Val1 -- trailing comment\nfrom T")
    assert [(t.kind, t.value) for t in toks[:-1]] == [
        ("keyword", "SELECT"), ("ident", "val1"),
        ("keyword", "FROM"), ("ident", "t")]


def test_tokenize_numbers_strings_operators():
    toks = tokenize("1.5e-3 'a b' && = 0.86")
    assert [(t.kind, t.value) for t in toks[:-1]] == [
        ("number", "1.5e-3"), ("string", "a b"),
        ("op", "&&"), ("op", "="), ("number", "0.86")]


def test_tokenize_positions_point_into_input():
    text = "SELECT  val1 FROM t"
    for tok in tokenize(text)[:-1]:
        assert text[tok.pos:tok.pos + len("SELECT")].lower().startswith(
            tok.value[:1].lower())


def test_tokenize_errors_carry_position():
    with pytest.raises(LexError) as e:
        tokenize("SELECT 'oops")
    assert e.value.position == 7
    with pytest.raises(LexError) as e:
        tokenize("SELECT @x")
    assert e.value.position == 7


# -- parser -------------------------------------------------------------------

@pytest.mark.parametrize("text", SAMPLE_QUERIES, ids=["l1", "l2", "l3", "l4"])
def test_sample_queries_parse_unmodified(text):
    q = parse_query(text)
    assert isinstance(q, Query)
    assert q.select_items


def test_temp_diff_query_shape():
    q = parse_query(QUERY_TEMP_DIFF)
    assert [i.alias for i in q.select_items] == [None, "val2", "diffval", None]
    (sub,) = q.from_items
    assert isinstance(sub, SubqueryRef) and sub.alias == "foo"
    inner = sub.query
    assert [type(t) for t in inner.from_items] == [TableRef, TableRef]
    assert len(inner.where) == 3
    assert isinstance(inner.where[0], BinaryOp) and inner.where[0].op == "&&"


def test_aet_query_shape():
    q = parse_query(QUERY_AET)
    (sub,) = q.from_items
    guard = sub.query.where[1]
    assert isinstance(guard, IsNull) and guard.negated


def test_field_access_requires_parens():
    q = parse_query("SELECT (stats).max FROM t")
    expr = q.select_items[0].expr
    assert isinstance(expr, FieldAccess) and expr.field == "max"
    assert isinstance(expr.base, ColumnRef)


def test_constant_query_without_from():
    q = parse_query("SELECT 1 + 2")
    assert q.from_items == ()
    expr = q.select_items[0].expr
    assert isinstance(expr, BinaryOp) and expr.op == "+"


def test_precedence_and_unary():
    expr = parse_query("SELECT -a + b * c = d").select_items[0].expr
    assert isinstance(expr, BinaryOp) and expr.op == "="
    add = expr.left
    assert isinstance(add, BinaryOp) and add.op == "+"
    assert isinstance(add.left, UnaryNeg)
    assert isinstance(add.right, BinaryOp) and add.right.op == "*"


def test_parse_errors_report_position():
    with pytest.raises(ParseError) as e:
        parse_query("SELEKT 1")
    assert e.value.position == 0
    text = "SELECT x FROM (SELECT y FROM t)"
    with pytest.raises(ParseError) as e:
        parse_query(text)  # subquery alias is mandatory
    assert 0 <= e.value.position <= len(text)
    with pytest.raises(ParseError) as e:
        parse_query("SELECT x FROM t LIMIT -1")
    assert e.value.position == text.find("LIMIT") + 6 or e.value.position > 0


def test_trailing_input_rejected():
    with pytest.raises(ParseError):
        parse_query("SELECT 1; SELECT 2")


def test_limit_and_order_by():
    q = parse_query("SELECT a FROM t ORDER BY a DESC LIMIT 3")
    assert q.limit == 3 and q.order_desc
    q = parse_query("SELECT a FROM t ORDER BY a")
    assert not q.order_desc and q.limit is None


# -- print / parse round trip -------------------------------------------------

@pytest.mark.parametrize("text", SAMPLE_QUERIES, ids=["l1", "l2", "l3", "l4"])
def test_sample_query_roundtrip_structural(text):
    q = parse_query(text)
    assert parse_query(to_sql(q)) == q


_KEYWORDS = {"select", "from", "where", "and", "as", "order", "by",
             "asc", "desc", "limit", "is", "not", "null"}

idents = st.from_regex(r"[a-z_][a-z0-9_]{0,8}", fullmatch=True).filter(
    lambda s: s not in _KEYWORDS)
numbers = st.floats(min_value=0, allow_nan=False, allow_infinity=False)
strings = st.text(
    alphabet=st.characters(blacklist_characters="'\n", min_codepoint=32,
                           max_codepoint=126),
    max_size=10)


def _exprs():
    leaf = st.one_of(
        numbers.map(NumberLit),
        strings.map(StringLit),
        idents.map(lambda n: ColumnRef(n, None)),
        st.tuples(idents, idents).map(lambda t: ColumnRef(t[1], t[0])),
    )
    return st.recursive(
        leaf,
        lambda inner: st.one_of(
            st.tuples(st.sampled_from("=+-*/").map(str), inner, inner).map(
                lambda t: BinaryOp("&&" if t[0] == "=" and False else t[0],
                                   t[1], t[2])),
            st.tuples(inner, inner).map(lambda t: BinaryOp("&&", t[0], t[1])),
            inner.map(UnaryNeg),
            st.tuples(inner, idents).map(lambda t: FieldAccess(t[0], t[1])),
            st.tuples(idents, st.lists(inner, max_size=3)).map(
                lambda t: FuncCall(t[0].upper(), tuple(t[1]))),
            st.tuples(inner, st.booleans()).map(lambda t: IsNull(t[0], t[1])),
        ),
        max_leaves=12)


@st.composite
def _queries(draw, depth=1):
    items = tuple(
        SelectItem(draw(_exprs()), draw(st.one_of(st.none(), idents)))
        for _ in range(draw(st.integers(1, 3))))
    n_from = draw(st.integers(0, 2))
    froms = []
    for _ in range(n_from):
        if depth > 0 and draw(st.booleans()):
            froms.append(SubqueryRef(draw(_queries(depth=depth - 1)),
                                     draw(idents)))
        else:
            froms.append(TableRef(draw(idents),
                                  draw(st.one_of(st.none(), idents))))
    where = tuple(draw(st.lists(_exprs(), max_size=2))) if froms else ()
    order_by = draw(st.one_of(st.none(), _exprs()))
    return Query(items, tuple(froms), where, order_by,
                 draw(st.booleans()) if order_by is not None else False,
                 draw(st.one_of(st.none(), st.integers(0, 99))))


@settings(max_examples=150, deadline=None)
@given(_queries())
def test_random_ast_roundtrips_through_text(query):
    text = to_sql(query)
    assert parse_query(text) == query
