"""Tokenizer for the query language.

Keywords are case-insensitive; ``--`` starts a comment running to end of
line.  Every token records its byte offset for diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import LexError

KEYWORDS = frozenset({
    "SELECT", "FROM", "WHERE", "AND", "AS",
    "ORDER", "BY", "ASC", "DESC", "LIMIT",
    "IS", "NOT", "NULL",
})

# Longest first so '&&' wins over a stray '&'.
OPERATORS = ("&&", "=", "+", "-", "*", "/", "(", ")", ",", ".", ";")


@dataclass(frozen=True)
class Token:
    kind: str  # keyword | ident | number | string | op | eof
    value: str
    pos: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if text.startswith("--", i):
            nl = text.find("\n", i)
            i = n if nl < 0 else nl + 1
            continue
        if ch == "'":
            j = text.find("'", i + 1)
            if j < 0:
                raise LexError("unterminated string literal", i)
            tokens.append(Token("string", text[i + 1:j], i))
            i = j + 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            tokens.append(Token("number", text[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            upper = word.upper()
            if upper in KEYWORDS:
                tokens.append(Token("keyword", upper, i))
            else:
                tokens.append(Token("ident", word.lower(), i))
            i = j
            continue
        for op in OPERATORS:
            if text.startswith(op, i):
                tokens.append(Token("op", op, i))
                i += len(op)
                break
        else:
            raise LexError(f"unexpected character {ch!r}", i)
    tokens.append(Token("eof", "", n))
    return tokens
