"""Render syntax trees back to source text.

Output is fully parenthesized so it reparses to a structurally equal tree.
"""
from __future__ import annotations

from typing import List

from .syntax import (
    Assign, Binary, Call, ControlDecl, Lit, Name, Node, SetLit, SourceUnit,
    SystemDecl, Temporal, TypeExpr, Unary, VarsetDecl,
)


def quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def expr(node: Node) -> str:
    if isinstance(node, Lit):
        if isinstance(node.value, bool):
            return "true" if node.value else "false"
        if isinstance(node.value, int):
            return str(node.value)
        return quote(node.value)
    if isinstance(node, SetLit):
        return "{" + ", ".join(expr(i) for i in node.items) + "}"
    if isinstance(node, Name):
        return node.text
    if isinstance(node, Unary):
        # every operand form prints self-delimited
        return f"!{expr(node.operand)}"
    if isinstance(node, Binary):
        op = node.op
        op = {"=>": "->", "<=>": "<->"}.get(op, op)
        return f"({expr(node.left)} {op} {expr(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}(" + ", ".join(expr(a) for a in node.args) + ")"
    if isinstance(node, Temporal):
        if node.op in ("AU", "EU"):
            return f"{node.op[0]} [{expr(node.args[0])} U {expr(node.args[1])}]"
        if node.op == "U":
            return f"({expr(node.args[0])} U {expr(node.args[1])})"
        return f"{node.op} {expr(node.args[0])}"
    raise TypeError(f"cannot print {node!r}")


def type_expr(t: TypeExpr) -> str:
    if t.kind == "int":
        return f"int[{t.lo}..{t.hi}]"
    if t.kind == "set":
        return "set<string>"
    return t.kind


def _assigns(items) -> str:
    return "{ " + ", ".join(f"{a.target}: {expr(a.value)}" for a in items) + " }"


def varset(v: VarsetDecl) -> str:
    head = f"varset {v.name}"
    if v.extends:
        head += " extends " + ", ".join(v.extends)
    body = ",\n".join(f"    {d.name} :: {type_expr(d.type)}" for d in v.vars)
    return f"{head} {{\n{body}\n}}\n"


def system(s: SystemDecl) -> str:
    params = ", ".join(f"{p.name} :: {type_expr(p.type)}" for p in s.params)
    head = f"system {s.name}({params}) over {s.over}"
    if s.env:
        head += f" with {s.env}"
    lines: List[str] = [head + " {"]
    if s.init is not None:
        g = f" where [{expr(s.init_guard)}]" if s.init_guard is not None else ""
        lines.append(f"    init{g} {s.init}")
    for t in s.transitions:
        parts = [t.src]
        if t.guard is not None:
            parts.append(f"[{expr(t.guard)}]")
        parts.append("->")
        if t.inline_effect is not None:
            parts.append("@" + _assigns(t.inline_effect))
        elif t.effect is not None:
            parts.append("@" + t.effect)
        if t.action is not None and not (t.effect is not None and t.action == t.effect):
            parts.append(f"{t.action}()")
        elif t.action is not None and t.effect is not None:
            parts.append(f"{t.action}()")
        parts.append(t.dst)
        lines.append("    " + " ".join(parts))
    for e in s.effects:
        lines.append(f"    @{e.name} = {_assigns(e.writes)}")
    for d in s.declarators:
        lines.append(f"    {d.name} = {_assigns(d.assigns)}")
    for p in s.props:
        lines.append(f"    prop {p.name} {{ {expr(p.clause)} }}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def control(c: ControlDecl) -> str:
    head = f"main control system {c.name}()"
    if c.env:
        head += f" over {c.env}"
    lines = [head + " {"]
    if c.init:
        lines.append(f"    init {_assigns(c.init)}")
    if c.instances:
        insts = ", ".join(
            f"{i.system}(" + ", ".join(expr(a) for a in i.args) + f") as {i.alias}"
            for i in c.instances)
        lines.append(f"    async {insts}")
    for f in c.formulas:
        lines.append(f"    {f.kind} {expr(f.formula)}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def unit(u: SourceUnit) -> str:
    chunks = [varset(v) for v in u.varsets]
    chunks += [system(s) for s in u.systems]
    chunks += [control(c) for c in u.controls]
    return "\n".join(chunks)
