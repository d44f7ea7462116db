"""SQL-subset query language: lexer, parser, planner, and executor."""

from .lexer import Token, tokenize
from .parser import parse, parse_query
from .printer import to_sql
from .planner import plan
from .executor import ResultSet, execute, run_query

__all__ = [
    "Token",
    "tokenize",
    "parse",
    "parse_query",
    "to_sql",
    "plan",
    "execute",
    "run_query",
    "ResultSet",
]
