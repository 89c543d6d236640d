"""System graphs: named state declarators with guarded, action-labelled transitions."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

from .. import ir
from ..errors import ArityError, DomainError
from ..frontend.resolve import CheckedSystem
from ..ir import Const, Expr, Type

Writes = Tuple[Tuple[str, Expr], ...]


@dataclass(frozen=True)
class ActionEffect:
    action: str
    writes: Writes

    @property
    def is_empty(self) -> bool:
        return not self.writes


@dataclass(frozen=True)
class GraphTransition:
    src: str
    guard: Expr
    action: Optional[str]  # None is the epsilon label
    dst: str
    writes: Writes = ()

    @property
    def effect(self) -> Optional[ActionEffect]:
        return None if self.action is None else ActionEffect(self.action, self.writes)


@dataclass(frozen=True)
class SystemGraph:
    """A system graph, possibly instantiated under an alias.

    Before instantiation `alias` is empty, names are system-local and guards
    may mention `Param` nodes.  Afterwards every local variable and clause is
    prefixed with ``alias.`` and arguments are constants.
    """
    name: str
    alias: str
    params: Tuple[Tuple[str, Type], ...]
    local_vars: Dict[str, Type]
    env_name: Optional[str]
    env_vars: Dict[str, Type]
    declarators: Dict[str, Writes]
    transitions: Tuple[GraphTransition, ...]
    initial: str
    init_guard: Expr = ir.TRUE
    clauses: Dict[str, Expr] = field(default_factory=dict)
    args: Tuple[Const, ...] = ()

    @property
    def variables(self) -> Dict[str, Type]:
        out = dict(self.env_vars)
        out.update(self.local_vars)
        return out

    @property
    def actions(self) -> Tuple[str, ...]:
        seen = []
        for t in self.transitions:
            if t.action is not None and t.action not in seen:
                seen.append(t.action)
        return tuple(seen)

    def occupancy_prop(self, declarator: str) -> ir.At:
        if declarator not in self.declarators:
            raise KeyError(declarator)
        return ir.At(self.alias, declarator)


def build_system_graph(system: CheckedSystem) -> SystemGraph:
    transitions = tuple(
        GraphTransition(t.src, t.guard, t.action, t.dst, t.writes)
        for t in system.transitions)
    return SystemGraph(
        name=system.name,
        alias="",
        params=system.params,
        local_vars=dict(system.local_vars),
        env_name=system.env_name,
        env_vars=dict(system.env_vars),
        declarators=dict(system.declarators),
        transitions=transitions,
        initial=system.init,
        init_guard=system.init_guard if system.init_guard is not None else ir.TRUE,
        clauses=dict(system.props),
    )


def eliminate_actions(g: SystemGraph) -> SystemGraph:
    """Relabel every transition whose action writes nothing as epsilon."""
    transitions = tuple(
        replace(t, action=None) if t.action is not None and not t.writes else t
        for t in g.transitions)
    return replace(g, transitions=transitions)


def _check_arg(value: Const, name: str, ptype: Type, universe: Optional[Sequence[str]]) -> None:
    if value.type.kind != ptype.kind:
        raise DomainError(f"argument {name} expects {ptype}, got {ir.show(value)}")
    if ptype.kind == "int" and not ptype.lo <= value.value <= ptype.hi:
        raise DomainError(f"argument {name}={value.value} outside {ptype}")
    if universe is not None:
        pool = set(universe)
        items = [value.value] if ptype.kind == "string" else (
            list(value.value) if ptype.kind == "set" else [])
        for item in items:
            if item not in pool:
                raise DomainError(f"argument {name}={item!r} outside the string domain")


def instantiate(g: SystemGraph, args: Sequence, alias: str,
                universe: Optional[Sequence[str]] = None) -> SystemGraph:
    """Bind system arguments to constants and prefix local names with `alias`."""
    if g.alias:
        raise ValueError(f"system graph {g.name} is already instantiated as {g.alias}")
    if len(args) != len(g.params):
        raise ArityError(f"{g.name} expects {len(g.params)} arguments, got {len(args)}")
    consts = []
    for (name, ptype), a in zip(g.params, args):
        c = a if isinstance(a, Const) else ir.const(a)
        if ptype.kind == "int" and c.type.kind == "int":
            c = Const(c.value, ptype)
        _check_arg(c, name, ptype, universe)
        consts.append(c)
    bound = {name: c for (name, _), c in zip(g.params, consts)}
    local = set(g.local_vars)

    def q(e: Expr) -> Expr:
        return ir.qualify(e, alias, local, bound)

    def qw(writes: Writes) -> Writes:
        return tuple((f"{alias}.{v}" if v in local else v, q(e)) for v, e in writes)

    return SystemGraph(
        name=g.name,
        alias=alias,
        params=g.params,
        local_vars={f"{alias}.{k}": t for k, t in g.local_vars.items()},
        env_name=g.env_name,
        env_vars=dict(g.env_vars),
        declarators={d: qw(w) for d, w in g.declarators.items()},
        transitions=tuple(GraphTransition(t.src, q(t.guard), t.action, t.dst, qw(t.writes))
                          for t in g.transitions),
        initial=g.initial,
        init_guard=q(g.init_guard),
        clauses={f"{alias}.{k}": q(ir.PropRef(k, v)) for k, v in g.clauses.items()},
        args=tuple(consts),
    )


def inert(g: SystemGraph) -> SystemGraph:
    """The same instance with every transition removed: it never moves."""
    return replace(g, transitions=())
