"""Graphviz emission: one cluster per instance, one node per declarator."""
from __future__ import annotations

import re
from typing import List

from .. import ir
from ..core.compose import Composition
from ..core.graph import SystemGraph


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def edge_label(t, alias: str = "") -> str:
    """``[guard] / action``, leaving out a trivial guard or an epsilon action."""
    parts = []
    if t.guard != ir.TRUE:
        text = ir.show(t.guard)
        if alias:
            text = re.sub(r"(?<![\w.])" + re.escape(alias) + r"\.", "", text)
        parts.append(f"[{text}]")
    if t.action is not None:
        parts.append(f"/ {t.action}")
    return " ".join(parts)


def _cluster(g: SystemGraph, index: int) -> List[str]:
    prefix = g.alias or g.name
    node = {d: _q(f"{prefix}.{d}") for d in g.declarators}
    title = f"{g.alias}: {g.name}" if g.alias else g.name
    out = [f"  subgraph cluster_{index} {{", f"    label={_q(title)};"]
    for d in g.declarators:
        attrs = [f"label={_q(d)}"]
        if d == g.initial:
            attrs.append("peripheries=2")
        out.append(f"    {node[d]} [{', '.join(attrs)}];")
    for t in g.transitions:
        out.append(f"    {node[t.src]} -> {node[t.dst]} [label={_q(edge_label(t, g.alias))}];")
    out.append("  }")
    return out


def emit_dot(comp: Composition) -> str:
    """Deterministic DOT text; the initial declarator of each instance is double-circled."""
    out = [f"digraph {_q(comp.name)} {{", "  compound=true;", "  node [shape=ellipse];"]
    for k, g in enumerate(comp.instances):
        out += _cluster(g, k)
    out.append("}")
    return "\n".join(out) + "\n"


def emit_system_dot(g: SystemGraph) -> str:
    """DOT text for a single system graph."""
    out = [f"digraph {_q(g.alias or g.name)} {{", "  node [shape=ellipse];"]
    out += _cluster(g, 0)
    out.append("}")
    return "\n".join(out) + "\n"
