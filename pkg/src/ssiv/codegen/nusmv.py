"""NuSMV emission.

The composition becomes a single ``MODULE main``:

* string variables are symbolic enums over the whole string universe, bounded
  integers keep their range, sets become one boolean per universe element
  (``disclose__VC_H``) and every instance gets a location variable;
* a scheduler variable ``sched`` names the instance that fires next.  An
  INVAR only lets it point at an instance with an enabled transition, and
  TRANS fires one enabled transition of that instance;
* every transition constrains the next value of every variable, writing
  either its effect/declarator expression or the current value (frame);
* instance props become DEFINEs and formulas become CTLSPEC/LTLSPEC lines in
  declaration order.

Identifiers that are not valid NuSMV names or collide with reserved words
are renamed; every rename is reported as a warning.
"""
from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .. import ir
from ..core.compose import Composition
from ..core.layout import Layout
from ..core.lts import Stepper, flatten
from ..errors import EmitError
from ..frontend.resolve import CheckedFormula
from ..ir import At, Const, Expr, Op, PropRef, Temporal, Var

RESERVED = frozenset("""
MODULE DEFINE MDEFINE CONSTANTS VAR IVAR FROZENVAR INIT TRANS INVAR SPEC CTLSPEC LTLSPEC
PSLSPEC COMPUTE NAME INVARSPEC FAIRNESS JUSTICE COMPASSION ISA ASSIGN CONSTRAINT SIMPWFF
CTLWFF LTLWFF PSLWFF COMPWFF IN MIN MAX MIRROR PRED PREDICATES process array of boolean
integer real word word1 bool signed unsigned extend resize sizeof uwconst swconst EX AX EF
AF EG AG E F O G H X Y Z A U S V T BU EBF ABF EBG ABG case esac mod next init union in xor
xnor self TRUE FALSE count abs max min running toint floor
""".split())

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")

SCHED = "sched"


class EmitWarning(UserWarning):
    pass


@dataclass
class NusmvProgram:
    text: str
    renames: Dict[str, str] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    spec_kinds: Tuple[str, ...] = ()

    def __str__(self) -> str:
        return self.text


class _Names:
    """Injective mapping of model names to NuSMV identifiers."""

    def __init__(self):
        self.taken: Dict[str, str] = {}
        self.map: Dict[Tuple[str, str], str] = {}
        self.renames: Dict[str, str] = {}
        self.warnings: List[str] = []

    def get(self, space: str, name: str) -> str:
        key = (space, name)
        if key in self.map:
            return self.map[key]
        base = name.replace(".", "__") if space == "var" else name
        ident = base if _IDENT.match(base) else re.sub(r"[^A-Za-z0-9_]", "_", base)
        if not re.match(r"[A-Za-z_]", ident):
            ident = "s_" + ident
        if ident in RESERVED:
            ident += "_"
        while ident in self.taken and self.taken[ident] != f"{space}:{name}":
            ident += "_"
        if ident != base:
            msg = f"renamed {name!r} to {ident!r} for NuSMV"
            self.renames[name] = ident
            self.warnings.append(msg)
        self.taken[ident] = f"{space}:{name}"
        self.map[key] = ident
        return ident


def _and(parts: Sequence[str]) -> str:
    parts = [p for p in parts if p != "TRUE"]
    if "FALSE" in parts:
        return "FALSE"
    if not parts:
        return "TRUE"
    return parts[0] if len(parts) == 1 else "(" + " & ".join(parts) + ")"


def _or(parts: Sequence[str]) -> str:
    parts = [p for p in parts if p != "FALSE"]
    if "TRUE" in parts:
        return "TRUE"
    if not parts:
        return "FALSE"
    return parts[0] if len(parts) == 1 else "(" + " | ".join(parts) + ")"


class _Lowering:
    def __init__(self, comp: Composition, names: _Names):
        self.comp = comp
        self.names = names
        self.universe = comp.universe
        self.types = comp.variables
        self.clauses = comp.clauses
        # reserve variable names before any constant can take them
        for v in self.types:
            names.get("var", v)
        for g in comp.instances:
            names.get("var", f"{g.alias}.loc")
        names.get("var", SCHED)
        for s in self.universe:
            names.get("const", s)

    def var(self, name: str) -> str:
        return self.names.get("var", name)

    def const(self, s: str) -> str:
        return self.names.get("const", s)

    def elem(self, set_var: str, x: str) -> str:
        return f"{self.var(set_var)}__{self.const(x)}"

    def loc(self, alias: str) -> str:
        return self.var(f"{alias}.loc")

    # -- scalar expressions ------------------------------------------------

    def ex(self, e: Expr) -> str:
        if isinstance(e, Const):
            kind = e.type.kind
            if kind == "bool":
                return "TRUE" if e.value else "FALSE"
            if kind == "int":
                return str(e.value)
            if kind == "string":
                return self.const(e.value)
            raise EmitError("set constant used as a scalar")
        if isinstance(e, Var):
            if e.type.kind == "set":
                raise EmitError(f"set variable {e.name} used as a scalar")
            return self.var(e.name)
        if isinstance(e, At):
            return f"({self.loc(e.alias)} = {self.const(e.declarator)})"
        if isinstance(e, PropRef):
            if e.name in self.clauses:
                return self.var(e.name)
            return self.ex(e.body)
        if isinstance(e, Temporal):
            return self.temporal(e)
        if isinstance(e, ir.Param):
            raise EmitError(f"unbound system argument {e.name}")
        op, a = e.op, e.args
        if op == "not":
            return f"!{self._wrap(a[0])}"
        if op == "and":
            return _and([self.ex(a[0]), self.ex(a[1])])
        if op == "or":
            return _or([self.ex(a[0]), self.ex(a[1])])
        if op in ("implies", "iff"):
            sym = "->" if op == "implies" else "<->"
            return f"({self.ex(a[0])} {sym} {self.ex(a[1])})"
        if op in ("eq", "ne") and a[0].type.kind == "set":
            same = _and([self._iff(self.mem(a[0], x), self.mem(a[1], x)) for x in self.universe])
            return same if op == "eq" else f"!{self._paren(same)}"
        if op in ("eq", "ne", "lt", "le", "gt", "ge"):
            return f"({self.ex(a[0])} {ir.SYMBOLS[op]} {self.ex(a[1])})"
        if op == "in":
            elem, s = a
            if isinstance(elem, Const):
                return self.mem(s, elem.value)
            return _or([_and([f"({self.ex(elem)} = {self.const(x)})", self.mem(s, x)])
                        for x in self.universe])
        if op in ("add", "sub") and e.type.kind == "int":
            return f"({self.ex(a[0])} {ir.SYMBOLS[op]} {self.ex(a[1])})"
        if op == "hash":
            arms = []
            for x in self.universe:
                h = ir.hash_value(x)
                if h in self.comp.universe:
                    arms.append(f"{self.ex(a[0])} = {self.const(x)} : {self.const(h)};")
            arms.append(f"TRUE : {self.const(ir.NONE)};")
            return "case " + " ".join(arms) + " esac"
        raise EmitError(f"cannot lower operator {op}")

    def _wrap(self, e: Expr) -> str:
        return self._paren(self.ex(e))

    @staticmethod
    def _paren(s: str) -> str:
        if s.startswith("(") and s.endswith(")") or _IDENT.match(s) or s in ("TRUE", "FALSE"):
            return s
        return f"({s})"

    @staticmethod
    def _iff(p: str, q: str) -> str:
        if p == q:
            return "TRUE"
        if q == "TRUE":
            return p
        if q == "FALSE":
            return "FALSE" if p == "TRUE" else f"!{_Lowering._paren(p)}"
        return f"({p} <-> {q})"

    # -- sets --------------------------------------------------------------

    def mem(self, e: Expr, x: str) -> str:
        """Boolean expression for `x in e`, `e` set-typed."""
        if isinstance(e, Const):
            return "TRUE" if x in e.value else "FALSE"
        if isinstance(e, Var):
            return self.elem(e.name, x)
        if isinstance(e, PropRef):
            return self.mem(e.body, x)
        op, a = e.op, e.args
        if op == "setlit":
            return _or([self._is(arg, x) for arg in a])
        if op in ("add", "sub"):
            left = self.mem(a[0], x)
            right = self._is(a[1], x) if a[1].type.kind == "string" else self.mem(a[1], x)
            if op == "add":
                return _or([left, right])
            neg = "FALSE" if right == "TRUE" else "TRUE" if right == "FALSE" else f"!{self._paren(right)}"
            return _and([left, neg])
        raise EmitError(f"cannot lower set operator {op}")

    def _is(self, e: Expr, x: str) -> str:
        if isinstance(e, Const):
            return "TRUE" if e.value == x else "FALSE"
        return f"({self.ex(e)} = {self.const(x)})"

    # -- temporal formulas -------------------------------------------------

    def temporal(self, e: Expr) -> str:
        if not isinstance(e, Temporal):
            return self.ex(e)
        op, a = e.op, e.args
        if op in ("EU", "AU"):
            return f"{op[0]} [ {self.ex(a[0])} U {self.ex(a[1])} ]"
        if op == "U":
            return f"({self.ex(a[0])} U {self.ex(a[1])})"
        return f"{op} {self._paren(self.ex(a[0]))}"


def _type_decl(low: _Lowering, t: ir.Type) -> str:
    if t.kind == "bool":
        return "boolean"
    if t.kind == "int":
        return f"{t.lo}..{t.hi}"
    return "{" + ", ".join(low.const(s) for s in low.universe) + "}"


def emit_nusmv(comp: Composition, formulas: Optional[Sequence[CheckedFormula]] = None,
               warn: bool = True) -> NusmvProgram:
    """NuSMV program for `comp`; `formulas` default to the composition's own."""
    if formulas is None:
        formulas = comp.formulas
    names = _Names()
    low = _Lowering(comp, names)
    layout = Layout(comp)
    out: List[str] = [f"-- {comp.name}: generated by ssiv", "MODULE main", "", "VAR"]

    scalars: List[Tuple[str, ir.Type]] = []  # (model name, type) in layout order
    for name, t in comp.env_vars.items():
        scalars.append((name, t))
    for g in comp.instances:
        for name, t in g.local_vars.items():
            scalars.append((name, t))

    out.append(f"    {SCHED} : {{{', '.join(low.const(g.alias) for g in comp.instances)}}};")
    for g in comp.instances:
        decls = ", ".join(low.const(d) for d in g.declarators)
        out.append(f"    {low.loc(g.alias)} : {{{decls}}};")
    next_vars: List[Tuple[str, object]] = []  # (nusmv name, (model var, element|None))
    for name, t in scalars:
        if t.kind == "set":
            for x in low.universe:
                out.append(f"    {low.elem(name, x)} : boolean;")
                next_vars.append((low.elem(name, x), (name, x)))
        else:
            out.append(f"    {low.var(name)} : {_type_decl(low, t)};")
            next_vars.append((low.var(name), (name, None)))

    # props and enabledness
    transitions = flatten(comp)
    out += ["", "DEFINE"]
    for pname, body in comp.clauses.items():
        if isinstance(body, PropRef) and body.name == pname:
            body = body.body
        out.append(f"    {low.var(pname)} := {low.ex(body)};")
    enabled = {}
    for g in comp.instances:
        guards = [_and([f"({low.loc(g.alias)} = {low.const(t.src)})", low.ex(t.guard)])
                  for t in transitions if t.alias == g.alias]
        ident = low.var(f"{g.alias}.enabled")
        enabled[g.alias] = ident
        out.append(f"    {ident} := {_or(guards)};")

    # initial states, computed exactly as the explicit-state engine does
    rows = Stepper(comp, layout).initial_rows()
    inits = [layout.decode(r) for r in rows]
    columns: Dict[str, List[str]] = {}
    for g in comp.instances:
        columns[low.loc(g.alias)] = [low.const(v[g.alias]) for v in inits]
    for name, t in scalars:
        for v in inits:
            val = v[name]
            if t.kind == "set":
                for x in low.universe:
                    columns.setdefault(low.elem(name, x), []).append(
                        "TRUE" if x in val else "FALSE")
            elif t.kind == "bool":
                columns.setdefault(low.var(name), []).append("TRUE" if val else "FALSE")
            elif t.kind == "int":
                columns.setdefault(low.var(name), []).append(str(val))
            else:
                columns.setdefault(low.var(name), []).append(low.const(val))
    fixed = {k: vals[0] for k, vals in columns.items() if len(set(vals)) == 1}
    varying = [k for k in columns if k not in fixed]
    out += ["", "ASSIGN"]
    for k, v in fixed.items():
        out.append(f"    init({k}) := {v};")
    if varying:
        out += ["", "INIT"]
        alts = [_and([f"{k} = {columns[k][i]}" for k in varying]) for i in range(len(inits))]
        out.append("    " + "\n    | ".join(alts))

    out += ["", "INVAR"]
    out.append("    " + _and([f"({SCHED} = {low.const(g.alias)} -> {enabled[g.alias]})"
                              for g in comp.instances]))

    out += ["", "TRANS", "    case"]
    for g in comp.instances:
        arms = []
        for t in transitions:
            if t.alias != g.alias:
                continue
            merged: Dict[str, Expr] = {}
            for v, e in t.writes:
                merged[v] = e
            for v, e in g.declarators[t.dst]:
                merged[v] = e
            parts = [f"{low.loc(g.alias)} = {low.const(t.src)}"]
            guard = low.ex(t.guard)
            if guard != "TRUE":
                parts.append(guard)
            for h in comp.instances:
                nxt = low.const(t.dst) if h is g else low.loc(h.alias)
                parts.append(f"next({low.loc(h.alias)}) = {nxt}")
            for ident, (name, x) in next_vars:
                if name in merged:
                    e = merged[name]
                    value = low.mem(e, x) if x is not None else low.ex(e)
                else:
                    value = ident
                parts.append(f"next({ident}) = {value}")
            label = t.label
            arms.append(f"        -- {t.src} -> {t.dst} ({label})\n        ("
                        + "\n         & ".join(parts) + ")")
        body = "\n        |\n".join(arms) if arms else "        FALSE"
        out.append(f"      {SCHED} = {low.const(g.alias)} :\n{body};")
    out.append("    esac;")

    kinds = []
    if formulas:
        out.append("")
    for f in formulas:
        kw = "LTLSPEC" if f.kind == "ltl" else "CTLSPEC"
        kinds.append(f.kind)
        out.append(f"{kw} {low.temporal(f.expr) if ir.is_temporal(f.expr) else low.ex(f.expr)}"
                   f"  -- {f.text}")
    text = "\n".join(out) + "\n"
    if warn:
        for w in names.warnings:
            warnings.warn(w, EmitWarning, stacklevel=2)
    return NusmvProgram(text, dict(names.renames), list(names.warnings), tuple(kinds))


def smv_valuation(comp: Composition, state: Dict[str, object]) -> Dict[str, object]:
    """A decoded engine state in the emitted program's vocabulary.

    Locations and strings map to enum constant names, sets to one boolean
    per universe element; the scheduler variable is left out.
    """
    low = _Lowering(comp, _Names())
    out: Dict[str, object] = {}
    for g in comp.instances:
        out[low.loc(g.alias)] = low.const(state[g.alias])
    for name, t in comp.variables.items():
        v = state[name]
        if t.kind == "set":
            for x in low.universe:
                out[low.elem(name, x)] = x in v
        elif t.kind == "string":
            out[low.var(name)] = low.const(v)
        else:
            out[low.var(name)] = v
    return out
