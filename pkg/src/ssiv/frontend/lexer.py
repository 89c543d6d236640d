"""Tokenizer for `.sz` modeling sources and standalone formulas."""
from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import List

from ..errors import LexError, Span

KEYWORDS = frozenset({
    "varset", "system", "over", "with", "init", "prop", "main", "control",
    "async", "as", "ctl", "ltl", "true", "false", "where", "extends",
    "string", "bool", "int", "set",
})

# word operators share token kinds with their symbolic spellings
WORD_OPERATORS = {
    "and": "and", "or": "or", "not": "not", "in": "in", "notin": "notin",
    "conforms": "conforms",
}

# longest match first
PUNCTUATION = [
    ("<->", "iff"),
    ("::", "coloncolon"), ("->", "arrow"), ("=>", "implies"), ("==", "eq"),
    ("!=", "neq"), ("<=", "le"), (">=", "ge"), ("..", "dotdot"),
    ("&&", "and"), ("||", "or"), ("|>", "conforms"),
    ("{", "lbrace"), ("}", "rbrace"), ("(", "lparen"), (")", "rparen"),
    ("[", "lbracket"), ("]", "rbracket"), (",", "comma"), (":", "colon"),
    ("=", "eq"), ("<", "lt"), (">", "gt"), ("&", "and"), ("|", "or"),
    ("!", "not"), ("@", "at"), (".", "dot"), ("+", "plus"), ("-", "minus"),
    ("∧", "and"), ("∨", "or"), ("¬", "not"), ("→", "arrow"), ("⇒", "implies"),
    ("⟹", "implies"), ("↔", "iff"), ("≠", "neq"), ("≤", "le"), ("≥", "ge"),
    ("∈", "in"), ("∉", "notin"), ("≻", "conforms"), ("∅", "empty"),
    ("□", "box"), ("◇", "diamond"), ("◯", "circle"), ("○", "circle"),
    ("∀", "forall"), ("∃", "exists"), ("∄", "nexists"),
    ("⊤", "top"), ("⊥", "bottom"),
]


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: Span

    def __repr__(self) -> str:
        if self.kind in ("kw", "ident", "strlit", "int"):
            return f"{self.kind}:{self.text}"
        return self.kind

    @property
    def value(self):
        if self.kind == "int":
            return int(self.text)
        return self.text


def tokenize(source: str, file: str = "<input>") -> List[Token]:
    """Split `source` into tokens, ending with an `eof` token.

    String literal tokens carry the unescaped, interned contents as text.
    """
    tokens: List[Token] = []
    i = 0
    line, col = 1, 1
    n = len(source)

    def advance(k: int) -> None:
        nonlocal i, line, col
        for ch in source[i:i + k]:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        i += k

    while i < n:
        ch = source[i]
        if ch in " \t\r\n﻿":
            advance(1)
            continue
        if source.startswith("//", i):
            j = source.find("\n", i)
            advance((n if j < 0 else j) - i)
            continue
        if source.startswith("/*", i):
            j = source.find("*/", i + 2)
            if j < 0:
                raise LexError("unterminated block comment", Span(file, line, col))
            advance(j + 2 - i)
            continue
        span = Span(file, line, col)
        if ch == '"':
            j = i + 1
            chars = []
            while True:
                if j >= n or source[j] == "\n":
                    raise LexError("unterminated string literal", span)
                c = source[j]
                if c == "\\" and j + 1 < n:
                    chars.append(source[j + 1])
                    j += 2
                    continue
                if c == '"':
                    break
                chars.append(c)
                j += 1
            tokens.append(Token("strlit", sys.intern("".join(chars)), span))
            advance(j + 1 - i)
            continue
        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            tokens.append(Token("int", source[i:j], span))
            advance(j - i)
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            if word in WORD_OPERATORS:
                tokens.append(Token(WORD_OPERATORS[word], word, span))
            elif word in KEYWORDS:
                tokens.append(Token("kw", word, span))
            else:
                tokens.append(Token("ident", word, span))
            advance(j - i)
            continue
        for text, kind in PUNCTUATION:
            if source.startswith(text, i):
                tokens.append(Token(kind, text, span))
                advance(len(text))
                break
        else:
            raise LexError(f"illegal character {ch!r}", span)
    tokens.append(Token("eof", "", Span(file, line, col)))
    return tokens
