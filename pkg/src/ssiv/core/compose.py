"""Asynchronous composition of instantiated system graphs over a shared environment."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .. import ir
from ..errors import AliasClash, EnvMismatch
from ..frontend.resolve import CheckedFormula, Program
from ..ir import Const, Expr, Type
from .graph import SystemGraph, build_system_graph, eliminate_actions, inert, instantiate


@dataclass(frozen=True)
class Composition:
    instances: Tuple[SystemGraph, ...]
    env_vars: Dict[str, Type]
    env_init: Dict[str, Const]
    universe: Tuple[str, ...]
    formulas: Tuple[CheckedFormula, ...] = ()
    name: str = "main"

    @property
    def aliases(self) -> Tuple[str, ...]:
        return tuple(g.alias for g in self.instances)

    def instance(self, alias: str) -> SystemGraph:
        for g in self.instances:
            if g.alias == alias:
                return g
        raise KeyError(alias)

    @property
    def variables(self) -> Dict[str, Type]:
        """Global variable table: environment first, then prefixed locals."""
        out = dict(self.env_vars)
        for g in self.instances:
            out.update(g.local_vars)
        return out

    @property
    def clauses(self) -> Dict[str, Expr]:
        out: Dict[str, Expr] = {}
        for g in self.instances:
            out.update(g.clauses)
        return out

    def occupancy_props(self) -> Dict[str, ir.At]:
        return {f"{g.alias}.{d}": ir.At(g.alias, d)
                for g in self.instances for d in g.declarators}

    def map_instances(self, fn) -> "Composition":
        return replace(self, instances=tuple(fn(g) for g in self.instances))

    def eliminated(self) -> "Composition":
        return self.map_instances(eliminate_actions)

    def without(self, alias: str) -> "Composition":
        """Replace instance `alias` by an inert copy that never fires."""
        self.instance(alias)
        return self.map_instances(lambda g: inert(g) if g.alias == alias else g)


def compose_async(instances: Sequence[SystemGraph], env_init: Mapping[str, Const],
                  env_vars: Optional[Mapping[str, Type]] = None,
                  universe: Sequence[str] = (ir.NONE,),
                  formulas: Sequence[CheckedFormula] = ()) -> Composition:
    """Interleave `instances` over one shared environment evaluation."""
    seen = set()
    for g in instances:
        if not g.alias:
            raise AliasClash(f"system graph {g.name} is not instantiated")
        if g.alias in seen:
            raise AliasClash(f"instance alias {g.alias} used twice")
        seen.add(g.alias)
    if env_vars is None:
        env_vars = dict(instances[0].env_vars) if instances else {}
    env_vars = dict(env_vars)
    for g in instances:
        if g.env_vars and g.env_vars != env_vars:
            raise EnvMismatch(f"instance {g.alias} ({g.name}) runs over environment "
                              f"{g.env_name}, which differs from the composition's")
    missing = [k for k in env_vars if k not in env_init]
    extra = [k for k in env_init if k not in env_vars]
    if missing or extra:
        raise EnvMismatch("environment initialization does not match the environment: "
                          f"missing {missing}, unknown {extra}")
    names = set(env_vars)
    for g in instances:
        clash = names & set(g.local_vars)
        if clash:
            raise AliasClash(f"variables {sorted(clash)} defined twice")
        names |= set(g.local_vars)
    return Composition(tuple(instances), env_vars, dict(env_init), tuple(universe),
                       tuple(formulas))


def build_composition(program: Program, eliminate: bool = False,
                      inert_aliases: Iterable[str] = ()) -> Composition:
    """Instantiate and compose the instances declared by the main control system."""
    from ..errors import NoControlSystemError

    control = program.control
    if control is None:
        raise NoControlSystemError("no main control system in the compilation")
    graphs: Dict[str, SystemGraph] = {}
    instances: List[SystemGraph] = []
    inert_aliases = set(inert_aliases)
    for inst in control.instances:
        if inst.system not in graphs:
            graphs[inst.system] = build_system_graph(program.systems[inst.system])
        g = instantiate(graphs[inst.system], inst.args, inst.alias, program.universe)
        if eliminate:
            g = eliminate_actions(g)
        if inst.alias in inert_aliases:
            g = inert(g)
        instances.append(g)
    comp = compose_async(instances, control.init, control.env_vars, program.universe,
                         control.formulas)
    return replace(comp, name=control.name)
