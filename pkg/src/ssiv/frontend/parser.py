"""Recursive-descent parser for the modeling language.

The grammar is documented in docs/grammar.md.  Syntax errors inside a
top-level declaration are collected and the parser resynchronizes on the
next `varset`, `system` or `main` keyword, so one run reports every broken
declaration.
"""
from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

from ..errors import Diagnostic, MixedLogicError, ParseError, Span
from .lexer import Token, tokenize
from .syntax import (
    CTL_OPS, LTL_OPS, Assign, Binary, Call, ControlDecl, DeclaratorDecl,
    EffectDecl, FormulaDecl, InstanceDecl, Lit, Name, Node, PropDecl, SetLit,
    SourceUnit, SystemDecl, Temporal, TransitionDecl, TypeExpr, Unary,
    VarDecl, VarsetDecl,
)

COMPARISONS = {
    "eq": "=", "neq": "!=", "lt": "<", "le": "<=", "gt": ">", "ge": ">=",
    "in": "in", "notin": "notin", "conforms": "conforms",
}
UNARY_CTL = frozenset({"AX", "EX", "AF", "EF", "AG", "EG"})
SYMBOL_TEMPORAL = {"box": "G", "diamond": "F", "circle": "X"}
TOP_LEVEL = ("varset", "system", "main")


class Parser:
    def __init__(self, tokens: Sequence[Token]):
        self.tokens = list(tokens)
        self.pos = 0
        self.formula_mode = False

    # -- token helpers ---------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def at_kw(self, word: str) -> bool:
        return self.at("kw", word)

    def next(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.pos += 1
        return t

    def error(self, expected: Sequence[str], what: Optional[str] = None) -> ParseError:
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        wanted = what or " or ".join(expected)
        return ParseError(f"expected {wanted}, found {found}", t.span, expected)

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        if not self.at(kind, text):
            raise self.error([text or kind])
        return self.next()

    def expect_kw(self, word: str) -> Token:
        return self.expect("kw", word)

    def ident(self) -> str:
        return self.expect("ident").text

    # -- compilation unit ------------------------------------------------

    def parse_unit(self) -> SourceUnit:
        varsets: List[VarsetDecl] = []
        systems: List[SystemDecl] = []
        controls: List[ControlDecl] = []
        errors: List[Diagnostic] = []
        first_expected: Sequence[str] = ()
        while not self.at("eof"):
            start = self.pos
            try:
                if self.at_kw("varset"):
                    varsets.append(self.varset())
                elif self.at_kw("system"):
                    systems.append(self.system())
                elif self.at_kw("main"):
                    controls.append(self.control())
                else:
                    raise self.error(["varset", "system", "main"], "a declaration")
            except ParseError as exc:
                if not errors:
                    first_expected = exc.expected
                errors.extend(exc.diagnostics)
                self.pos = max(self.pos, start + 1)
                while not self.at("eof") and not any(self.at_kw(k) for k in TOP_LEVEL):
                    self.next()
        if errors:
            raise ParseError(errors[0].message, errors[0].span, first_expected,
                             diagnostics=errors)
        return SourceUnit(tuple(varsets), tuple(systems), tuple(controls))

    def type_expr(self) -> TypeExpr:
        t = self.tok
        if self.at_kw("string") or self.at_kw("bool"):
            self.next()
            return TypeExpr(t.text, span=t.span)
        if self.at_kw("int"):
            self.next()
            self.expect("lbracket")
            lo = self.signed_int()
            self.expect("dotdot")
            hi = self.signed_int()
            self.expect("rbracket")
            return TypeExpr("int", lo, hi, span=t.span)
        if self.at_kw("set"):
            self.next()
            self.expect("lt")
            self.expect_kw("string")
            self.expect("gt")
            return TypeExpr("set", span=t.span)
        raise self.error(["string", "bool", "int", "set"], "a type")

    def signed_int(self) -> int:
        neg = False
        if self.at("minus"):
            self.next()
            neg = True
        value = int(self.expect("int").text)
        return -value if neg else value

    def var_decls(self, closer: str) -> Tuple[VarDecl, ...]:
        out = []
        while not self.at(closer):
            t = self.tok
            name = self.ident()
            self.expect("coloncolon")
            out.append(VarDecl(name, self.type_expr(), span=t.span))
            if self.at("comma"):
                self.next()
            elif not self.at(closer) and not self.at("ident"):
                raise self.error([",", closer])
        return tuple(out)

    def varset(self) -> VarsetDecl:
        start = self.expect_kw("varset")
        name = self.ident()
        extends: List[str] = []
        if self.at_kw("extends"):
            self.next()
            extends.append(self.ident())
            while self.at("comma"):
                self.next()
                extends.append(self.ident())
        self.expect("lbrace")
        decls = self.var_decls("rbrace")
        self.expect("rbrace")
        return VarsetDecl(name, decls, tuple(extends), span=start.span)

    def assigns(self) -> Tuple[Assign, ...]:
        self.expect("lbrace")
        out = []
        while not self.at("rbrace"):
            t = self.tok
            target = self.ident()
            self.expect("colon")
            out.append(Assign(target, self.expr(), span=t.span))
            if self.at("comma"):
                self.next()
            elif not self.at("rbrace"):
                raise self.error([",", "}"])
        self.expect("rbrace")
        return tuple(out)

    def bracket_guard(self) -> Node:
        self.expect("lbracket")
        g = self.expr()
        self.expect("rbracket")
        return g

    # -- systems ---------------------------------------------------------

    def system(self) -> SystemDecl:
        start = self.expect_kw("system")
        name = self.ident()
        self.expect("lparen")
        params = self.var_decls("rparen")
        self.expect("rparen")
        self.expect_kw("over")
        over = self.ident()
        env = None
        if self.at_kw("with"):
            self.next()
            env = self.ident()
        self.expect("lbrace")
        init: Optional[str] = None
        init_guard: Optional[Node] = None
        declarators: List[DeclaratorDecl] = []
        transitions: List[TransitionDecl] = []
        effects: List[EffectDecl] = []
        props: List[PropDecl] = []
        while not self.at("rbrace"):
            t = self.tok
            if self.at_kw("prop"):
                self.next()
                pname = self.ident()
                self.expect("lbrace")
                clause = self.expr()
                self.expect("rbrace")
                props.append(PropDecl(pname, clause, span=t.span))
            elif self.at("at"):
                self.next()
                ename = self.ident()
                self.expect("eq")
                effects.append(EffectDecl(ename, self.assigns(), span=t.span))
            elif self.at("ident") and self.peek().kind == "eq":
                dname = self.ident()
                self.next()
                declarators.append(DeclaratorDecl(dname, self.assigns(), span=t.span))
            elif self.at("ident") or self.at_kw("init"):
                marked, guard, chain = self.chain()
                if marked is not None:
                    if init is not None:
                        raise ParseError(f"system {name} has more than one `init` marker", t.span)
                    init, init_guard = marked, guard
                transitions.extend(chain)
            else:
                raise self.error(["prop", "@", "declarator", "transition", "}"],
                                 "a system member")
        self.expect("rbrace")
        return SystemDecl(name, params, over, env, init, init_guard,
                          tuple(declarators), tuple(transitions), tuple(effects),
                          tuple(props), span=start.span)

    def chain(self):
        """Parse `init? (where [g])? A [g]? -> @e? act()? B [g]? -> ... C`."""
        marked = None
        init_guard = None
        is_init = False
        if self.at_kw("init"):
            self.next()
            is_init = True
            if self.at_kw("where"):
                self.next()
                init_guard = self.bracket_guard()
        head = self.tok
        src = self.ident()
        if is_init:
            marked = src
        pending_guard = self.bracket_guard() if self.at("lbracket") else None
        out: List[TransitionDecl] = []
        while self.at("arrow"):
            arrow = self.next()
            guard = pending_guard
            if self.at("lbracket"):
                if guard is not None:
                    raise ParseError("transition has two guards", arrow.span)
                guard = self.bracket_guard()
            effect = None
            inline = None
            action = None
            if self.at("at"):
                self.next()
                if self.at("lbrace"):
                    inline = self.assigns()
                else:
                    effect = self.ident()
            if self.at("ident") and self.peek().kind == "lparen":
                action = self.ident()
                self.expect("lparen")
                self.expect("rparen")
            elif effect is not None:
                action = effect
            dst = self.ident()
            out.append(TransitionDecl(src, dst, guard, effect, inline, action, span=arrow.span))
            src = dst
            pending_guard = self.bracket_guard() if self.at("lbracket") else None
        if pending_guard is not None:
            raise self.error(["->"], "`->` after a guard")
        if not out and not is_init:
            raise ParseError(f"declarator {src} is neither defined nor part of a transition",
                             head.span, ["=", "->"])
        return marked, init_guard, out

    # -- control system ----------------------------------------------------

    def control(self) -> ControlDecl:
        start = self.expect_kw("main")
        self.expect_kw("control")
        self.expect_kw("system")
        name = self.ident()
        self.expect("lparen")
        self.expect("rparen")
        env = None
        if self.at_kw("over"):
            self.next()
            env = self.ident()
        self.expect("lbrace")
        init: Tuple[Assign, ...] = ()
        instances: List[InstanceDecl] = []
        formulas: List[FormulaDecl] = []
        while not self.at("rbrace"):
            t = self.tok
            if self.at_kw("init"):
                self.next()
                init = init + self.assigns()
            elif self.at_kw("async"):
                self.next()
                instances.append(self.instance())
                while self.at("comma"):
                    self.next()
                    instances.append(self.instance())
            elif self.at_kw("ctl") or self.at_kw("ltl"):
                kind = self.next().text
                formula = self.formula()
                check_logic(formula, kind)
                formulas.append(FormulaDecl(kind, formula, span=t.span))
            else:
                raise self.error(["init", "async", "ctl", "ltl", "}"], "a control-system member")
        self.expect("rbrace")
        return ControlDecl(name, env, init, tuple(instances), tuple(formulas), span=start.span)

    def instance(self) -> InstanceDecl:
        t = self.tok
        system = self.ident()
        self.expect("lparen")
        args = []
        while not self.at("rparen"):
            args.append(self.expr())
            if self.at("comma"):
                self.next()
            elif not self.at("rparen"):
                raise self.error([",", ")"])
        self.expect("rparen")
        self.expect_kw("as")
        return InstanceDecl(system, tuple(args), self.ident(), span=t.span)

    # -- expressions -------------------------------------------------------

    def formula(self) -> Node:
        saved = self.formula_mode
        self.formula_mode = True
        try:
            return self.expr()
        finally:
            self.formula_mode = saved

    def expr(self) -> Node:
        left = self.until()
        if self.at("arrow") or self.at("implies"):
            t = self.next()
            return Binary("=>", left, self.expr(), span=t.span)
        if self.at("iff"):
            t = self.next()
            return Binary("<=>", left, self.expr(), span=t.span)
        return left

    def until(self) -> Node:
        left = self.disjunction()
        if self.formula_mode and self.at("ident", "U"):
            t = self.next()
            return Temporal("U", (left, self.until()), span=t.span)
        return left

    def disjunction(self) -> Node:
        left = self.conjunction()
        while self.at("or"):
            t = self.next()
            left = Binary("|", left, self.conjunction(), span=t.span)
        return left

    def conjunction(self) -> Node:
        left = self.unary()
        while self.at("and"):
            t = self.next()
            left = Binary("&", left, self.unary(), span=t.span)
        return left

    def _temporal_word(self) -> Optional[str]:
        """Return the temporal operator starting at the current token, if any."""
        t = self.tok
        if not self.formula_mode:
            return None
        nxt = self.peek()
        if t.kind == "ident" and nxt.kind != "dot":
            if t.text in UNARY_CTL:
                return t.text
            if t.text in ("A", "E"):
                if nxt.kind == "lbracket":
                    return t.text + "U"
                if nxt.kind == "ident" and nxt.text in ("F", "G", "X") and self.peek(2).kind != "dot":
                    return t.text + nxt.text
                if nxt.kind in SYMBOL_TEMPORAL:
                    return t.text + SYMBOL_TEMPORAL[nxt.kind]
            if t.text in ("F", "G", "X"):
                return t.text
        if t.kind in ("forall", "exists", "nexists"):
            q = "A" if t.kind == "forall" else "E"
            if nxt.kind in SYMBOL_TEMPORAL:
                return q + SYMBOL_TEMPORAL[nxt.kind]
            if nxt.kind == "ident" and nxt.text in ("F", "G", "X"):
                return q + nxt.text
            if nxt.kind == "lbracket":
                return q + "U"
            raise ParseError("path quantifier must be followed by a temporal operator",
                             nxt.span, ["□", "◇", "○", "["])
        if t.kind in SYMBOL_TEMPORAL:
            return SYMBOL_TEMPORAL[t.kind]
        return None

    def unary(self) -> Node:
        t = self.tok
        if self.at("not"):
            self.next()
            if self.at("in"):  # `not in` at the start of an operand is malformed
                raise self.error(["expression"])
            return Unary("!", self.unary(), span=t.span)
        op = self._temporal_word()
        if op is not None:
            negate = t.kind == "nexists"
            if op in ("AU", "EU"):
                self.next()
                self.expect("lbracket")
                left = self.disjunction()
                if not self.at("ident", "U"):
                    raise self.error(["U"])
                self.next()
                right = self.disjunction()
                self.expect("rbracket")
                node: Node = Temporal(op, (left, right), span=t.span)
            else:
                two_tokens = len(op) == 2 and not (t.kind == "ident" and t.text == op)
                self.next()
                if two_tokens:
                    self.next()
                node = Temporal(op, (self.unary(),), span=t.span)
            return Unary("!", node, span=t.span) if negate else node
        return self.comparison()

    def comparison(self) -> Node:
        left = self.additive()
        t = self.tok
        if t.kind in COMPARISONS:
            self.next()
            return Binary(COMPARISONS[t.kind], left, self.additive(), span=t.span)
        if t.kind == "not" and self.peek().kind == "in":
            self.next()
            self.next()
            return Binary("notin", left, self.additive(), span=t.span)
        return left

    def additive(self) -> Node:
        left = self.primary()
        while self.at("plus") or self.at("minus"):
            t = self.next()
            left = Binary(t.text, left, self.primary(), span=t.span)
        return left

    def primary(self) -> Node:
        t = self.tok
        if t.kind == "strlit":
            self.next()
            return Lit(t.text, span=t.span)
        if t.kind == "int":
            self.next()
            return Lit(int(t.text), span=t.span)
        if t.kind == "minus" and self.peek().kind == "int":
            self.next()
            return Lit(-int(self.next().text), span=t.span)
        if t.kind == "kw" and t.text in ("true", "false"):
            self.next()
            return Lit(t.text == "true", span=t.span)
        if t.kind in ("top", "bottom"):
            self.next()
            return Lit(t.kind == "top", span=t.span)
        if t.kind == "empty":
            self.next()
            return SetLit((), span=t.span)
        if t.kind == "lbrace":
            self.next()
            items = []
            while not self.at("rbrace"):
                items.append(self.additive())
                if self.at("comma"):
                    self.next()
                elif not self.at("rbrace"):
                    raise self.error([",", "}"])
            self.expect("rbrace")
            return SetLit(tuple(items), span=t.span)
        if t.kind == "lparen":
            self.next()
            inner = self.expr()
            self.expect("rparen")
            return inner
        if t.kind == "ident":
            self.next()
            if self.at("lparen"):
                self.next()
                args = []
                while not self.at("rparen"):
                    args.append(self.expr())
                    if self.at("comma"):
                        self.next()
                    elif not self.at("rparen"):
                        raise self.error([",", ")"])
                self.expect("rparen")
                return Call(t.text, tuple(args), span=t.span)
            parts = [t.text]
            while self.at("dot"):
                self.next()
                parts.append(self.ident())
            return Name(tuple(parts), span=t.span)
        raise self.error(["expression"], "an expression")


def temporal_ops(node: Node) -> set:
    """Collect the temporal operator names occurring in `node`."""
    found = set()
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, Temporal):
            found.add(n.op)
            stack.extend(n.args)
        elif isinstance(n, (Unary,)):
            stack.append(n.operand)
        elif isinstance(n, Binary):
            stack.extend((n.left, n.right))
        elif isinstance(n, (Call, SetLit)):
            stack.extend(n.args if isinstance(n, Call) else n.items)
    return found


def infer_logic(node: Node) -> str:
    ops = temporal_ops(node)
    ctl = ops & CTL_OPS
    ltl = ops & LTL_OPS
    if ctl and ltl:
        raise MixedLogicError("formula mixes CTL path quantifiers with LTL operators",
                              getattr(node, "span", None))
    return "ltl" if ltl else "ctl"


def check_logic(node: Node, kind: str) -> None:
    ops = temporal_ops(node)
    if kind == "ctl" and ops & LTL_OPS:
        bad = sorted(ops & LTL_OPS)[0]
        raise MixedLogicError(f"LTL operator {bad} inside a ctl formula "
                              f"(CTL operators need a path quantifier)",
                              getattr(node, "span", None))
    if kind == "ltl" and ops & CTL_OPS:
        bad = sorted(ops & CTL_OPS)[0]
        raise MixedLogicError(f"CTL operator {bad} inside an ltl formula",
                              getattr(node, "span", None))


def parse_unit(tokens: Sequence[Token]) -> SourceUnit:
    return Parser(tokens).parse_unit()


def parse_source(source: str, file: str = "<input>") -> SourceUnit:
    unit = parse_unit(tokenize(source, file))
    return SourceUnit(unit.varsets, unit.systems, unit.controls, (file,))


def parse_formula(text: str, kind: Optional[str] = None, file: str = "<formula>"):
    """Parse a standalone property.

    Returns the formula tree; with `kind=None` the logic is inferred and a
    `MixedLogicError` is raised for formulas mixing both logics.
    """
    p = Parser(tokenize(text, file))
    node = p.formula()
    if not p.at("eof"):
        raise p.error(["end of formula"])
    if kind is None:
        infer_logic(node)
    else:
        check_logic(node, kind)
    return node
