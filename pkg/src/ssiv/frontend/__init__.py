"""Front end: tokenize, parse, resolve and type-check `.sz` sources."""
from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence, Tuple, Union

from .lexer import Token, tokenize
from .parser import parse_formula, parse_source, parse_unit
from .resolve import Program, check_formula, resolve_and_typecheck
from .syntax import SourceUnit

__all__ = [
    "Program", "SourceUnit", "Token", "check_formula", "compile_files", "compile_text",
    "parse_files", "parse_formula", "parse_source", "parse_unit", "resolve_and_typecheck",
    "tokenize",
]


def parse_files(paths: Iterable[Union[str, Path]]) -> SourceUnit:
    unit = SourceUnit()
    for p in paths:
        p = Path(p)
        unit = unit.merge(parse_source(p.read_text(encoding="utf-8"), str(p)))
    return unit


def compile_files(paths: Iterable[Union[str, Path]],
                  extra_formulas: Sequence[Tuple[str, str]] = ()) -> Program:
    """Parse and check a flat multi-file compilation unit.

    `extra_formulas` are (kind, text) pairs checked against the control system
    in addition to the formulas it declares.
    """
    unit = parse_files(paths)
    extra = [(k, parse_formula(t, k)) for k, t in extra_formulas]
    return resolve_and_typecheck(unit, extra)


def compile_text(*sources: str, extra_formulas: Sequence[Tuple[str, str]] = ()) -> Program:
    unit = SourceUnit()
    for i, src in enumerate(sources):
        unit = unit.merge(parse_source(src, f"<source{i}>"))
    extra = [(k, parse_formula(t, k)) for k, t in extra_formulas]
    return resolve_and_typecheck(unit, extra)
