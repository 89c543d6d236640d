"""Name resolution and type checking.

Turns a parsed `SourceUnit` into a `Program`: every name bound, every
expression typed, string domains computed, the declarator uniqueness rule
verified and the environment initialization checked for totality.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .. import ir
from ..errors import (
    NO_SPAN, DomainTypeError, InitError, PropClash, Span, UnboundNameError,
    UniquenessError,
)
from ..ir import BOOL, NONE, SET, STRING, Const, Expr, Op, Type
from ..library.conformity import conformity_atom
from . import pretty, syntax as S


@dataclass(frozen=True)
class CheckedTransition:
    src: str
    dst: str
    guard: Expr
    action: Optional[str]
    writes: Tuple[Tuple[str, Expr], ...]
    effect: Optional[str] = None
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass
class CheckedSystem:
    name: str
    params: Tuple[Tuple[str, Type], ...]
    local_vars: Dict[str, Type]
    env_name: Optional[str]
    env_vars: Dict[str, Type]
    init: str
    init_guard: Optional[Expr]
    declarators: Dict[str, Tuple[Tuple[str, Expr], ...]]
    transitions: Tuple[CheckedTransition, ...]
    props: Dict[str, Expr]
    decl: S.SystemDecl


@dataclass(frozen=True)
class CheckedInstance:
    system: str
    args: Tuple[Const, ...]
    alias: str


@dataclass(frozen=True)
class CheckedFormula:
    kind: str
    expr: Expr
    text: str


@dataclass
class CheckedControl:
    name: str
    env_name: Optional[str]
    env_vars: Dict[str, Type]
    init: Dict[str, Const]
    instances: Tuple[CheckedInstance, ...]
    formulas: Tuple[CheckedFormula, ...]


@dataclass
class Program:
    universe: Tuple[str, ...]
    varsets: Dict[str, Dict[str, Type]]
    systems: Dict[str, CheckedSystem]
    control: Optional[CheckedControl]
    unit: S.SourceUnit

    def formula_scope(self) -> "FormulaScope":
        return FormulaScope(self)


def _type(t: S.TypeExpr) -> Type:
    if t.kind == "int":
        if t.lo > t.hi:
            raise DomainTypeError(f"empty integer range {t.lo}..{t.hi}", t.span)
        return ir.int_type(t.lo, t.hi)
    return {"bool": BOOL, "string": STRING, "set": SET}[t.kind]


def _walk_syntax(node):
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        if isinstance(n, S.Unary):
            stack.append(n.operand)
        elif isinstance(n, S.Binary):
            stack.extend((n.left, n.right))
        elif isinstance(n, (S.Call, S.Temporal)):
            stack.extend(n.args)
        elif isinstance(n, S.SetLit):
            stack.extend(n.items)


def _unit_expressions(unit: S.SourceUnit):
    for s in unit.systems:
        if s.init_guard is not None:
            yield s.init_guard
        for d in s.declarators:
            yield from (a.value for a in d.assigns)
        for e in s.effects:
            yield from (a.value for a in e.writes)
        for t in s.transitions:
            if t.guard is not None:
                yield t.guard
            yield from (a.value for a in t.inline_effect or ())
        yield from (p.clause for p in s.props)
    for c in unit.controls:
        yield from (a.value for a in c.init)
        for i in c.instances:
            yield from i.args
        yield from (f.formula for f in c.formulas)


def compute_universe(unit: S.SourceUnit, extra: Tuple[S.Node, ...] = ()) -> Tuple[str, ...]:
    """Interned string domain: every literal in the compilation plus "NONE".

    When a digest call occurs anywhere, the digest image of every literal is
    interned too.  "NONE" comes first; the rest is sorted.
    """
    literals = set()
    hashed = False
    for root in list(_unit_expressions(unit)) + list(extra):
        for n in _walk_syntax(root):
            if isinstance(n, S.Lit) and isinstance(n.value, str):
                literals.add(n.value)
            elif isinstance(n, S.Call) and n.func == "hash":
                hashed = True
    literals.discard(NONE)
    if hashed:
        literals |= {ir.hash_value(s) for s in literals}
    return (NONE,) + tuple(sorted(literals))


def as_bool(e: Expr, span: Span) -> Expr:
    kind = e.type.kind
    if kind == "bool":
        return e
    if kind == "string":
        return Op("ne", (e, Const(NONE, STRING)), BOOL)
    if kind == "set":
        return Op("ne", (e, ir.EMPTY), BOOL)
    raise DomainTypeError(f"integer expression `{ir.show(e)}` used as a condition", span)


def _coerce_empty(e: Expr, other: Expr) -> Expr:
    """`∅`/`{}` against a string operand means the "NONE" sentinel."""
    if other.type.kind == "string" and isinstance(e, Const) and e.type.kind == "set":
        if e.value:
            raise DomainTypeError(f"set literal compared with string `{ir.show(other)}`")
        return Const(NONE, STRING)
    return e


def _check_int_literal(e: Expr, target: Type, span: Span) -> None:
    if target.kind == "int" and isinstance(e, Const) and e.type.kind == "int":
        if not target.lo <= e.value <= target.hi:
            raise DomainTypeError(
                f"literal {e.value} outside the domain {target}", span)


def compatible(a: Type, b: Type) -> bool:
    return a.kind == b.kind


class Scope:
    """Base name scope; subclasses bind `Name` nodes."""

    allow_temporal = False

    def lookup(self, name: S.Name) -> Expr:  # pragma: no cover - abstract
        raise NotImplementedError

    def expr(self, node: S.Node) -> Expr:
        span = getattr(node, "span", NO_SPAN)
        if isinstance(node, S.Lit):
            return ir.const(node.value)
        if isinstance(node, S.SetLit):
            items = [self.expr(i) for i in node.items]
            for i, item in zip(node.items, items):
                if item.type.kind != "string":
                    raise DomainTypeError("set elements must be strings", i.span)
            if all(isinstance(i, Const) for i in items):
                return Const(frozenset(i.value for i in items), SET)
            return Op("setlit", tuple(items), SET)
        if isinstance(node, S.Name):
            return self.lookup(node)
        if isinstance(node, S.Unary):
            return ir.neg(as_bool(self.expr(node.operand), span))
        if isinstance(node, S.Call):
            if node.func != "hash" or len(node.args) != 1:
                raise UnboundNameError(f"unknown function {node.func}/{len(node.args)}", span)
            arg = self.expr(node.args[0])
            if arg.type.kind != "string":
                raise DomainTypeError("hash() expects a string", span)
            return ir.fold(Op("hash", (arg,), STRING))
        if isinstance(node, S.Temporal):
            if not self.allow_temporal:
                raise DomainTypeError(f"temporal operator {node.op} outside a formula", span)
            return ir.Temporal(node.op, tuple(as_bool(self.expr(a), span) for a in node.args))
        if isinstance(node, S.Binary):
            return self.binary(node, span)
        raise TypeError(node)

    def binary(self, node: S.Binary, span: Span) -> Expr:
        op = node.op
        left = self.expr(node.left)
        right = self.expr(node.right)
        if op in ("&", "|", "=>", "<=>"):
            name = {"&": "and", "|": "or", "=>": "implies", "<=>": "iff"}[op]
            return Op(name, (as_bool(left, span), as_bool(right, span)), BOOL)
        if op in ("=", "!="):
            left, right = _coerce_empty(left, right), _coerce_empty(right, left)
            if not compatible(left.type, right.type):
                raise DomainTypeError(
                    f"cannot compare {left.type} `{ir.show(left)}` with "
                    f"{right.type} `{ir.show(right)}`", span)
            _check_int_literal(right, left.type, span)
            _check_int_literal(left, right.type, span)
            return Op("eq" if op == "=" else "ne", (left, right), BOOL)
        if op in ("<", "<=", ">", ">="):
            if left.type.kind != "int" or right.type.kind != "int":
                raise DomainTypeError(f"ordering `{op}` needs integer operands", span)
            name = {"<": "lt", "<=": "le", ">": "gt", ">=": "ge"}[op]
            return Op(name, (left, right), BOOL)
        if op in ("in", "notin"):
            if left.type.kind != "string" or right.type.kind != "set":
                raise DomainTypeError("membership needs a string element and a set", span)
            atom = Op("in", (left, right), BOOL)
            return atom if op == "in" else ir.neg(atom)
        if op == "conforms":
            if left.type.kind != "string" or right.type.kind not in ("set", "string"):
                raise DomainTypeError("conformity needs a string attribute and a credential", span)
            return conformity_atom(left, right)
        if op in ("+", "-"):
            name = "add" if op == "+" else "sub"
            lk, rk = left.type.kind, right.type.kind
            if lk == "int" and rk == "int":
                lo = left.type.lo + right.type.lo if op == "+" else left.type.lo - right.type.hi
                hi = left.type.hi + right.type.hi if op == "+" else left.type.hi - right.type.lo
                return Op(name, (left, right), ir.int_type(lo, hi))
            if lk == "set" and rk in ("set", "string"):
                return Op(name, (left, right), SET)
            raise DomainTypeError(f"`{op}` is defined on integers and sets only", span)
        raise DomainTypeError(f"unknown operator {op}", span)


class SystemScope(Scope):
    def __init__(self, system: "CheckedSystem"):
        self.system = system
        self.params = dict(system.params)

    def lookup(self, name: S.Name) -> Expr:
        if len(name.parts) != 1:
            raise UnboundNameError(f"qualified name `{name.text}` inside system "
                                   f"{self.system.name}", name.span)
        n = name.parts[0]
        if n in self.params:
            return ir.Param(n, self.params[n])
        if n in self.system.local_vars:
            return ir.Var(n, self.system.local_vars[n])
        if n in self.system.env_vars:
            return ir.Var(n, self.system.env_vars[n])
        if n in self.system.props:
            return ir.PropRef(n, self.system.props[n])
        raise UnboundNameError(f"unbound identifier `{n}` in system {self.system.name}",
                               name.span)


class FormulaScope(Scope):
    """Resolves instance-qualified atoms against a control system."""

    allow_temporal = True

    def __init__(self, program: Program):
        self.program = program
        control = program.control
        self.env_vars = control.env_vars if control else {}
        self.instances = {i.alias: i for i in control.instances} if control else {}

    def lookup(self, name: S.Name) -> Expr:
        parts = name.parts
        if len(parts) == 1:
            if parts[0] in self.env_vars:
                return ir.Var(parts[0], self.env_vars[parts[0]])
            raise UnboundNameError(f"unbound identifier `{parts[0]}` in formula", name.span)
        if len(parts) != 2 or parts[0] not in self.instances:
            raise UnboundNameError(f"unknown instance in `{name.text}`", name.span)
        inst = self.instances[parts[0]]
        system = self.program.systems[inst.system]
        member = parts[1]
        args = {p: a for (p, _), a in zip(system.params, inst.args)}
        if member in system.props:
            return ir.qualify(ir.PropRef(member, system.props[member]), inst.alias,
                              system.local_vars, args)
        if member in system.declarators:
            return ir.At(inst.alias, member)
        if member in system.local_vars:
            return ir.Var(f"{inst.alias}.{member}", system.local_vars[member])
        if member in args:
            return args[member]
        if member in system.env_vars:
            return ir.Var(member, system.env_vars[member])
        raise UnboundNameError(
            f"`{member}` is not a prop, declarator, variable or argument of "
            f"{inst.alias} ({inst.system})", name.span)


def _resolve_varsets(unit: S.SourceUnit) -> Dict[str, Dict[str, Type]]:
    decls = {}
    for v in unit.varsets:
        if v.name in decls:
            raise DomainTypeError(f"varset {v.name} declared twice", v.span)
        decls[v.name] = v
    out: Dict[str, Dict[str, Type]] = {}

    def build(name: str, span: Span, trail: Tuple[str, ...]) -> Dict[str, Type]:
        if name in out:
            return out[name]
        if name not in decls:
            raise UnboundNameError(f"unknown varset {name}", span)
        if name in trail:
            raise DomainTypeError(f"varset {name} extends itself", span)
        v = decls[name]
        vars_: Dict[str, Type] = {}
        for base in v.extends:
            for k, t in build(base, v.span, trail + (name,)).items():
                if k in vars_ and vars_[k] != t:
                    raise DomainTypeError(f"variable {k} inherited with conflicting types", v.span)
                vars_[k] = t
        own = set()
        for d in v.vars:
            t = _type(d.type)
            if d.name in own or (d.name in vars_ and vars_[d.name] != t):
                raise DomainTypeError(f"variable {d.name} declared twice in varset {name}", d.span)
            own.add(d.name)
            vars_[d.name] = t
        out[name] = vars_
        return vars_

    for v in unit.varsets:
        build(v.name, v.span, ())
    return out


def _check_assign(scope: Scope, target_type: Type, value: S.Node, target: str,
                  span: Span) -> Expr:
    e = scope.expr(value)
    if target_type.kind == "string" and isinstance(e, Const) and e.type.kind == "set" \
            and not e.value:
        e = Const(NONE, STRING)
    if not compatible(target_type, e.type):
        raise DomainTypeError(f"cannot assign {e.type} `{ir.show(e)}` to {target} :: "
                              f"{target_type}", span)
    _check_int_literal(e, target_type, span)
    return e


def _check_system(decl: S.SystemDecl, varsets) -> CheckedSystem:
    if decl.over not in varsets:
        raise UnboundNameError(f"unknown varset {decl.over}", decl.span)
    local = dict(varsets[decl.over])
    env: Dict[str, Type] = {}
    if decl.env is not None:
        if decl.env not in varsets:
            raise UnboundNameError(f"unknown varset {decl.env}", decl.span)
        env = dict(varsets[decl.env])
        for k, t in env.items():
            if k in local:
                if local[k] != t:
                    raise DomainTypeError(
                        f"variable {k} declared differently in {decl.over} and {decl.env}",
                        decl.span)
                del local[k]
    params = []
    for p in decl.params:
        if p.name in local or p.name in env or p.name in dict(params):
            raise DomainTypeError(f"system argument {p.name} shadows another name", p.span)
        params.append((p.name, _type(p.type)))
    if decl.init is None:
        raise UnboundNameError(f"system {decl.name} has no `init` declarator", decl.span)

    system = CheckedSystem(decl.name, tuple(params), local, decl.env, env, decl.init,
                           None, {}, (), {}, decl)
    scope = SystemScope(system)
    mutable = dict(local)
    mutable.update(env)

    for p in decl.props:
        if p.name in system.props:
            raise DomainTypeError(f"prop {p.name} declared twice", p.span)
        system.props[p.name] = as_bool(scope.expr(p.clause), p.span)

    def writes_of(assigns, what: str) -> Tuple[Tuple[str, Expr], ...]:
        out = []
        seen = set()
        for a in assigns:
            if a.target in scope.params:
                raise DomainTypeError(f"{what} writes system argument {a.target}, "
                                      f"which is immutable", a.span)
            if a.target not in mutable:
                raise UnboundNameError(f"{what} assigns unknown variable {a.target}", a.span)
            if a.target in seen:
                raise DomainTypeError(f"{what} assigns {a.target} twice", a.span)
            seen.add(a.target)
            out.append((a.target, _check_assign(scope, mutable[a.target], a.value,
                                                a.target, a.span)))
        return tuple(out)

    effects = {}
    for e in decl.effects:
        if e.name in effects:
            raise DomainTypeError(f"effect @{e.name} declared twice", e.span)
        effects[e.name] = writes_of(e.writes, f"effect @{e.name}")

    declared = {}
    for d in decl.declarators:
        if d.name in declared:
            raise DomainTypeError(f"declarator {d.name} defined twice", d.span)
        declared[d.name] = (writes_of(d.assigns, f"declarator {d.name}"), d.span)

    order: List[str] = [decl.init]
    for t in decl.transitions:
        for n in (t.src, t.dst):
            if n not in order:
                order.append(n)
    for n in declared:
        if n not in order:
            order.append(n)
    system.declarators = {n: declared.get(n, ((), decl.span))[0] for n in order}

    seen_assign: Dict[frozenset, str] = {}
    for n in order:
        key = frozenset(system.declarators[n])
        if key in seen_assign:
            span = declared.get(n, (None, decl.span))[1]
            raise UniquenessError(
                f"declarators {seen_assign[key]} and {n} of system {decl.name} have the "
                f"same partial assignment", span)
        seen_assign[key] = n

    for n in order:
        if n in system.props:
            raise PropClash(f"prop {n} of system {decl.name} clashes with declarator {n}",
                            decl.span)

    transitions = []
    for t in decl.transitions:
        guard = ir.TRUE if t.guard is None else as_bool(scope.expr(t.guard), t.span)
        if t.inline_effect is not None:
            writes = writes_of(t.inline_effect, "inline effect")
        elif t.effect is not None:
            if t.effect not in effects:
                raise UnboundNameError(f"unknown effect @{t.effect}", t.span)
            writes = effects[t.effect]
        else:
            writes = ()
        transitions.append(CheckedTransition(t.src, t.dst, guard, t.action, writes,
                                             t.effect, span=t.span))
    system.transitions = tuple(transitions)
    if decl.init_guard is not None:
        system.init_guard = as_bool(scope.expr(decl.init_guard), decl.span)
    return system


def _literal(scope: Scope, node: S.Node, what: str) -> Const:
    e = scope.expr(node)
    if not isinstance(e, Const):
        raise DomainTypeError(f"{what} must be a literal", getattr(node, "span", NO_SPAN))
    return e


class _LiteralScope(Scope):
    def lookup(self, name: S.Name) -> Expr:
        raise UnboundNameError(f"`{name.text}` is not a literal", name.span)


def _check_control(decl: S.ControlDecl, program: Program, varsets) -> CheckedControl:
    env_name = decl.env
    if env_name is None:
        envs = {program.systems[i.system].env_name for i in decl.instances
                if i.system in program.systems}
        env_name = next(iter(envs)) if len(envs) == 1 else None
    env_vars: Dict[str, Type] = {}
    if env_name is not None:
        if env_name not in varsets:
            raise UnboundNameError(f"unknown varset {env_name}", decl.span)
        env_vars = dict(varsets[env_name])
    lits = _LiteralScope()
    init: Dict[str, Const] = {}
    for a in decl.init:
        if a.target not in env_vars:
            raise InitError(f"init assigns {a.target}, which is not an environment variable",
                            a.span)
        if a.target in init:
            raise InitError(f"environment variable {a.target} initialized twice", a.span)
        value = _check_assign(lits, env_vars[a.target], a.value, a.target, a.span)
        if not isinstance(value, Const):
            raise InitError(f"init value of {a.target} must be a literal", a.span)
        init[a.target] = value
    missing = [k for k in env_vars if k not in init]
    if missing:
        raise InitError("environment variables not initialized: " + ", ".join(missing),
                        decl.span)
    instances = []
    aliases = set()
    for i in decl.instances:
        if i.system not in program.systems:
            raise UnboundNameError(f"unknown system {i.system}", i.span)
        if i.alias in aliases:
            raise DomainTypeError(f"instance alias {i.alias} used twice", i.span)
        aliases.add(i.alias)
        system = program.systems[i.system]
        if len(i.args) != len(system.params):
            raise DomainTypeError(
                f"{i.system} expects {len(system.params)} arguments, got {len(i.args)}",
                i.span)
        args = []
        for (pname, ptype), node in zip(system.params, i.args):
            value = _check_assign(lits, ptype, node, pname, i.span)
            args.append(value)
        instances.append(CheckedInstance(i.system, tuple(args), i.alias))
    return CheckedControl(decl.name, env_name, env_vars, init, tuple(instances), ())


def check_formula(program: Program, node: S.Node, kind: str = "ctl") -> CheckedFormula:
    scope = program.formula_scope()
    span = getattr(node, "span", NO_SPAN)
    return CheckedFormula(kind, as_bool(scope.expr(node), span), pretty.expr(node))


def resolve_and_typecheck(unit: S.SourceUnit, extra_formulas=()) -> Program:
    """Bind names and check types; `extra_formulas` are (kind, node) pairs."""
    from ..errors import NoControlSystemError

    varsets = _resolve_varsets(unit)
    universe = compute_universe(unit, tuple(n for _, n in extra_formulas))
    systems: Dict[str, CheckedSystem] = {}
    for s in unit.systems:
        if s.name in systems:
            raise DomainTypeError(f"system {s.name} declared twice", s.span)
        systems[s.name] = _check_system(s, varsets)
    program = Program(universe, varsets, systems, None, unit)
    if len(unit.controls) > 1:
        raise NoControlSystemError("more than one `main control system`",
                                   unit.controls[1].span)
    if unit.controls:
        decl = unit.controls[0]
        program.control = _check_control(decl, program, varsets)
        formulas = [check_formula(program, f.formula, f.kind) for f in decl.formulas]
        formulas += [check_formula(program, n, k) for k, n in extra_formulas]
        program.control.formulas = tuple(formulas)
    return program
