"""Surface syntax tree produced by the parser.

Nodes compare structurally; source spans are carried along for diagnostics
but never take part in equality.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

from ..errors import NO_SPAN, Span


def _span():
    return field(default=NO_SPAN, compare=False, repr=False)


# -- expressions -------------------------------------------------------------

@dataclass(frozen=True)
class Lit:
    value: Union[bool, int, str]
    span: Span = _span()


@dataclass(frozen=True)
class SetLit:
    items: Tuple["Node", ...]
    span: Span = _span()


@dataclass(frozen=True)
class Name:
    parts: Tuple[str, ...]
    span: Span = _span()

    @property
    def text(self) -> str:
        return ".".join(self.parts)


@dataclass(frozen=True)
class Unary:
    op: str  # "!"
    operand: "Node"
    span: Span = _span()


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"
    span: Span = _span()


@dataclass(frozen=True)
class Call:
    func: str
    args: Tuple["Node", ...]
    span: Span = _span()


@dataclass(frozen=True)
class Temporal:
    """Temporal operator application.

    CTL: AX EX AF EF AG EG (one operand), AU EU (two operands).
    LTL: X F G (one operand), U (two operands).
    """
    op: str
    args: Tuple["Node", ...]
    span: Span = _span()


Node = Union[Lit, SetLit, Name, Unary, Binary, Call, Temporal]

CTL_OPS = frozenset({"AX", "EX", "AF", "EF", "AG", "EG", "AU", "EU"})
LTL_OPS = frozenset({"X", "F", "G", "U"})


# -- types -------------------------------------------------------------------

@dataclass(frozen=True)
class TypeExpr:
    kind: str  # bool | int | string | set
    lo: Optional[int] = None
    hi: Optional[int] = None
    span: Span = _span()


# -- declarations ------------------------------------------------------------

@dataclass(frozen=True)
class VarDecl:
    name: str
    type: TypeExpr
    span: Span = _span()


@dataclass(frozen=True)
class VarsetDecl:
    name: str
    vars: Tuple[VarDecl, ...]
    extends: Tuple[str, ...] = ()
    span: Span = _span()


@dataclass(frozen=True)
class Assign:
    target: str
    value: Node
    span: Span = _span()


@dataclass(frozen=True)
class EffectDecl:
    name: str
    writes: Tuple[Assign, ...]
    span: Span = _span()


@dataclass(frozen=True)
class DeclaratorDecl:
    name: str
    assigns: Tuple[Assign, ...]
    span: Span = _span()


@dataclass(frozen=True)
class TransitionDecl:
    src: str
    dst: str
    guard: Optional[Node] = None
    effect: Optional[str] = None  # `@name` reference
    inline_effect: Optional[Tuple[Assign, ...]] = None  # `@{ ... }`
    action: Optional[str] = None
    span: Span = _span()


@dataclass(frozen=True)
class PropDecl:
    name: str
    clause: Node
    span: Span = _span()


@dataclass(frozen=True)
class SystemDecl:
    name: str
    params: Tuple[VarDecl, ...]
    over: str
    env: Optional[str]
    init: Optional[str]
    init_guard: Optional[Node]
    declarators: Tuple[DeclaratorDecl, ...]
    transitions: Tuple[TransitionDecl, ...]
    effects: Tuple[EffectDecl, ...]
    props: Tuple[PropDecl, ...]
    span: Span = _span()


@dataclass(frozen=True)
class InstanceDecl:
    system: str
    args: Tuple[Node, ...]
    alias: str
    span: Span = _span()


@dataclass(frozen=True)
class FormulaDecl:
    kind: str  # ctl | ltl
    formula: Node
    span: Span = _span()


@dataclass(frozen=True)
class ControlDecl:
    name: str
    env: Optional[str]
    init: Tuple[Assign, ...]
    instances: Tuple[InstanceDecl, ...]
    formulas: Tuple[FormulaDecl, ...]
    span: Span = _span()


@dataclass(frozen=True)
class SourceUnit:
    varsets: Tuple[VarsetDecl, ...] = ()
    systems: Tuple[SystemDecl, ...] = ()
    controls: Tuple[ControlDecl, ...] = ()
    files: Tuple[str, ...] = field(default=(), compare=False)

    @property
    def control(self) -> Optional[ControlDecl]:
        return self.controls[0] if self.controls else None

    def merge(self, other: "SourceUnit") -> "SourceUnit":
        return SourceUnit(self.varsets + other.varsets,
                          self.systems + other.systems,
                          self.controls + other.controls,
                          self.files + other.files)
