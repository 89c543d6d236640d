"""Typed expression IR shared by the resolver, the engine and the emitters."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, FrozenSet, Tuple, Union

NONE = "NONE"


@dataclass(frozen=True)
class Type:
    kind: str  # bool | int | string | set
    lo: int = 0
    hi: int = 0

    def __str__(self) -> str:
        if self.kind == "int":
            return f"int[{self.lo}..{self.hi}]"
        if self.kind == "set":
            return "set<string>"
        return self.kind


BOOL = Type("bool")
STRING = Type("string")
SET = Type("set")


def int_type(lo: int, hi: int) -> Type:
    return Type("int", lo, hi)


Value = Union[bool, int, str, FrozenSet[str]]


@dataclass(frozen=True)
class Const:
    value: Value
    type: Type


@dataclass(frozen=True)
class Var:
    name: str
    type: Type


@dataclass(frozen=True)
class Param:
    """A system argument; replaced by a constant on instantiation."""
    name: str
    type: Type


@dataclass(frozen=True)
class At:
    """True while instance `alias` occupies `declarator` (alias "" = own system)."""
    alias: str
    declarator: str
    type: Type = BOOL


@dataclass(frozen=True)
class Op:
    op: str
    args: Tuple["Expr", ...]
    type: Type


@dataclass(frozen=True)
class PropRef:
    """Named clause; evaluates as its body."""
    name: str
    body: "Expr"
    type: Type = BOOL


@dataclass(frozen=True)
class Temporal:
    op: str
    args: Tuple["Expr", ...]
    type: Type = BOOL


Expr = Union[Const, Var, Param, At, Op, PropRef, Temporal]

TRUE = Const(True, BOOL)
FALSE = Const(False, BOOL)
EMPTY = Const(frozenset(), SET)

BOOL_OPS = frozenset({"not", "and", "or", "implies", "iff"})
CMP_OPS = frozenset({"eq", "ne", "lt", "le", "gt", "ge", "in"})
SYMBOLS = {
    "and": "&", "or": "|", "implies": "->", "iff": "<->", "eq": "=", "ne": "!=",
    "lt": "<", "le": "<=", "gt": ">", "ge": ">=", "in": "in", "add": "+", "sub": "-",
}


def const(value: Value) -> Const:
    if isinstance(value, bool):
        return Const(value, BOOL)
    if isinstance(value, int):
        return Const(value, int_type(value, value))
    if isinstance(value, str):
        return Const(value, STRING)
    return Const(frozenset(value), SET)


def neg(e: Expr) -> Expr:
    if isinstance(e, Op) and e.op == "not":
        return e.args[0]
    return Op("not", (e,), BOOL)


def conj(*es: Expr) -> Expr:
    es = tuple(e for e in es if e != TRUE)
    if not es:
        return TRUE
    out = es[0]
    for e in es[1:]:
        out = Op("and", (out, e), BOOL)
    return out


def children(e: Expr) -> Tuple[Expr, ...]:
    if isinstance(e, (Op, Temporal)):
        return e.args
    if isinstance(e, PropRef):
        return (e.body,)
    return ()


def transform(e: Expr, fn: Callable[[Expr], Expr]) -> Expr:
    """Rebuild `e` bottom-up, applying `fn` to every node after its children."""
    if isinstance(e, Op):
        e = Op(e.op, tuple(transform(a, fn) for a in e.args), e.type)
    elif isinstance(e, Temporal):
        e = Temporal(e.op, tuple(transform(a, fn) for a in e.args))
    elif isinstance(e, PropRef):
        e = PropRef(e.name, transform(e.body, fn))
    return fn(e)


def walk(e: Expr):
    stack = [e]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(children(n))


def variables(e: Expr) -> FrozenSet[str]:
    return frozenset(n.name for n in walk(e) if isinstance(n, Var))


def is_temporal(e: Expr) -> bool:
    return any(isinstance(n, Temporal) for n in walk(e))


def show_value(v: Value) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return '"' + v + '"'
    return "{" + ", ".join('"' + x + '"' for x in sorted(v)) + "}"


def show(e: Expr, props: bool = True) -> str:
    """Canonical text of an expression (used for atom names and reports)."""
    if isinstance(e, Const):
        return show_value(e.value)
    if isinstance(e, (Var, Param)):
        return e.name
    if isinstance(e, At):
        return f"{e.alias}.{e.declarator}" if e.alias else e.declarator
    if isinstance(e, PropRef):
        return e.name if props else show(e.body, props)
    if isinstance(e, Temporal):
        if e.op in ("AU", "EU"):
            return f"{e.op[0]} [{show(e.args[0], props)} U {show(e.args[1], props)}]"
        if e.op == "U":
            return f"({show(e.args[0], props)} U {show(e.args[1], props)})"
        return f"{e.op} {_wrap(e.args[0], props)}"
    if isinstance(e, Op):
        if e.op == "not":
            return "!" + _wrap(e.args[0], props)
        if e.op == "hash":
            return f"hash({show(e.args[0], props)})"
        if e.op == "setlit":
            return "{" + ", ".join(show(a, props) for a in e.args) + "}"
        if e.op in ("and", "or", "implies", "iff"):
            return f"{_wrap(e.args[0], props)} {SYMBOLS[e.op]} {_wrap(e.args[1], props)}"
        return f"{show(e.args[0], props)} {SYMBOLS[e.op]} {show(e.args[1], props)}"
    raise TypeError(f"not an expression: {e!r}")


def _wrap(e: Expr, props: bool) -> str:
    s = show(e, props)
    atomic = isinstance(e, (Const, Var, Param, At, PropRef)) or (
        isinstance(e, Op) and e.op in ("not", "hash", "setlit"))
    return s if atomic else f"({s})"


def atoms(e: Expr) -> Tuple[Expr, ...]:
    """Decompose a clause into the atomic propositions composing it.

    Boolean connectives and named clauses are looked through; everything
    else of boolean type (comparisons, membership, boolean variables,
    declarator occupancy) is an atom.  Order of first occurrence.
    """
    out = []
    seen = set()

    def visit(n: Expr) -> None:
        if isinstance(n, Const):
            return
        if isinstance(n, PropRef):
            visit(n.body)
            return
        if isinstance(n, Temporal) or (isinstance(n, Op) and n.op in BOOL_OPS):
            for a in n.args:
                visit(a)
            return
        if n not in seen:
            seen.add(n)
            out.append(n)

    visit(e)
    return tuple(out)


def hash_value(s: str) -> str:
    """Symbolic digest of a string constant (``hash("VC_H") == "VC_H_HASH"``)."""
    return s if s == NONE else s + "_HASH"


def fold(e: Expr) -> Expr:
    """Fold constant set literals and digests left behind by substitution."""
    def fn(n: Expr) -> Expr:
        if isinstance(n, Op) and all(isinstance(a, Const) for a in n.args):
            if n.op == "setlit":
                return Const(frozenset(a.value for a in n.args), SET)
            if n.op == "hash":
                return Const(hash_value(n.args[0].value), STRING)
        return n
    return transform(e, fn)


def qualify(e: Expr, alias: str, local_names, args) -> Expr:
    """Rename a system-scoped expression into the global namespace of `alias`.

    Local variables and props gain the ``alias.`` prefix, system arguments
    become the constants in `args`, and own-declarator occupancy is bound to
    the instance.  Environment variables are left untouched.
    """
    def fn(n: Expr) -> Expr:
        if isinstance(n, Var) and n.name in local_names:
            return Var(f"{alias}.{n.name}", n.type)
        if isinstance(n, Param):
            return args[n.name]
        if isinstance(n, At) and not n.alias:
            return At(alias, n.declarator)
        if isinstance(n, PropRef) and "." not in n.name:
            return PropRef(f"{alias}.{n.name}", n.body)
        return n
    return fold(transform(e, fn))
