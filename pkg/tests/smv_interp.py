"""A small interpreter for the NuSMV subset the emitter produces.

It knows nothing about the engine: it tokenizes and parses the program
text, enumerates initial states, explores TRANS under the INVAR, and can
evaluate CTLSPEC lines over the resulting graph with a naive labelling
checker.  Tests use it as an independent reading of the emitted program.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, List, Optional, Set, Tuple

_TOKEN = re.compile(r"""
    (?P<ws>\s+|--[^\n]*)
  | (?P<op><->|->|:=|!=|<=|>=|\.\.|[=<>!&|()\[\]{}:;,+\-])
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_$#]*)
""", re.VERBOSE)

SECTIONS = {"VAR", "DEFINE", "ASSIGN", "INIT", "INVAR", "TRANS", "CTLSPEC", "LTLSPEC", "MODULE"}
UNARY_TEMPORAL = {"EX", "AX", "EF", "AF", "EG", "AG", "X", "F", "G"}


def tokenize(text: str) -> List[str]:
    out, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise SyntaxError(f"bad character {text[pos]!r} at {pos}")
        pos = m.end()
        if m.lastgroup != "ws":
            out.append(m.group())
    out.append("<eof>")
    return out


# expression trees are tuples: ("id", name) ("int", n) ("next", name) (op, a, b) ...

class _Parser:
    def __init__(self, toks: List[str]):
        self.toks = toks
        self.i = 0

    @property
    def tok(self) -> str:
        return self.toks[self.i]

    def take(self, want: Optional[str] = None) -> str:
        t = self.toks[self.i]
        if want is not None and t != want:
            raise SyntaxError(f"expected {want!r}, found {t!r} at token {self.i}")
        self.i += 1
        return t

    def expr(self):
        return self.implies()

    def implies(self):
        left = self.iff()
        if self.tok == "->":
            self.take()
            return ("->", left, self.implies())
        return left

    def iff(self):
        left = self.disj()
        while self.tok == "<->":
            self.take()
            left = ("<->", left, self.disj())
        return left

    def disj(self):
        left = self.conj()
        while self.tok == "|":
            self.take()
            left = ("|", left, self.conj())
        return left

    def conj(self):
        left = self.until()
        while self.tok == "&":
            self.take()
            left = ("&", left, self.until())
        return left

    def until(self):
        left = self.compare()
        if self.tok == "U":
            self.take()
            return ("U", left, self.compare())
        return left

    def compare(self):
        left = self.additive()
        if self.tok in ("=", "!=", "<", "<=", ">", ">="):
            op = self.take()
            return (op, left, self.additive())
        return left

    def additive(self):
        left = self.unary()
        while self.tok in ("+", "-"):
            op = self.take()
            left = (op, left, self.unary())
        return left

    def unary(self):
        t = self.tok
        if t == "!":
            self.take()
            return ("!", self.unary())
        if t in UNARY_TEMPORAL:
            self.take()
            return (t, self.unary())
        if t in ("E", "A") and self.toks[self.i + 1] == "[":
            self.take()
            self.take("[")
            a = self.expr_no_until()
            self.take("U")
            b = self.expr()
            self.take("]")
            return (t + "U", a, b)
        return self.atom()

    def expr_no_until(self):
        # left operand of E [ p U q ]: a disjunction without a bare U
        left = self.compare()
        while self.tok in ("&", "|"):
            op = self.take()
            left = (op, left, self.compare())
        return left

    def atom(self):
        t = self.take()
        if t == "(":
            e = self.expr()
            self.take(")")
            return e
        if t == "case":
            arms = []
            while self.tok != "esac":
                c = self.expr()
                self.take(":")
                v = self.expr()
                self.take(";")
                arms.append((c, v))
            self.take("esac")
            return ("case", tuple(arms))
        if t == "next":
            self.take("(")
            name = self.take()
            self.take(")")
            return ("next", name)
        if t == "TRUE":
            return ("const", True)
        if t == "FALSE":
            return ("const", False)
        if t.isdigit():
            return ("const", int(t))
        if t == "-" and self.tok.isdigit():
            return ("const", -int(self.take()))
        if re.match(r"[A-Za-z_]", t):
            return ("id", t)
        raise SyntaxError(f"unexpected token {t!r}")


@dataclass
class SmvModel:
    domains: Dict[str, Tuple] = field(default_factory=dict)
    defines: Dict[str, tuple] = field(default_factory=dict)
    init_assign: Dict[str, tuple] = field(default_factory=dict)
    init: List[tuple] = field(default_factory=list)
    invar: List[tuple] = field(default_factory=list)
    trans: List[tuple] = field(default_factory=list)
    specs: List[Tuple[str, tuple]] = field(default_factory=list)

    @property
    def state_vars(self) -> List[str]:
        return [v for v in self.domains if v != "sched"]


def parse(text: str) -> SmvModel:
    p = _Parser(tokenize(text))
    m = SmvModel()
    section = None
    while p.tok != "<eof>":
        if p.tok in SECTIONS:
            section = p.take()
            if section == "MODULE":
                p.take()
            elif section in ("CTLSPEC", "LTLSPEC"):
                m.specs.append((section, p.expr()))
            elif section in ("INIT", "INVAR", "TRANS"):
                e = p.expr()
                if p.tok == ";":
                    p.take()
                getattr(m, section.lower()).append(e)
            continue
        if section == "VAR":
            name = p.take()
            p.take(":")
            if p.tok == "boolean":
                p.take()
                dom: Tuple = (False, True)
            elif p.tok == "{":
                p.take()
                vals = [p.take()]
                while p.tok == ",":
                    p.take()
                    vals.append(p.take())
                p.take("}")
                dom = tuple(vals)
            else:
                lo = p.atom()[1]
                p.take("..")
                hi = p.atom()[1]
                dom = tuple(range(lo, hi + 1))
            p.take(";")
            m.domains[name] = dom
        elif section == "DEFINE":
            name = p.take()
            p.take(":=")
            m.defines[name] = p.expr()
            p.take(";")
        elif section == "ASSIGN":
            p.take("init")
            p.take("(")
            name = p.take()
            p.take(")")
            p.take(":=")
            m.init_assign[name] = p.expr()
            p.take(";")
        else:
            raise SyntaxError(f"unexpected {p.tok!r} in section {section}")
    return m


# -- evaluation --------------------------------------------------------------

State = Tuple  # values of SmvModel.state_vars, in order


class Interpreter:
    def __init__(self, model: SmvModel):
        self.m = model
        self.vars = model.state_vars
        self.index = {v: i for i, v in enumerate(self.vars)}
        self.sched_dom = model.domains.get("sched", ())
        self._cache: Dict[int, Callable] = {}
        self._keep: List = []
        self._arm_cache: Dict[int, List] = {}

    def value(self, e, cur: Dict, nxt: Optional[Dict] = None):
        return self.compile(e)(cur)

    def compile(self, e) -> Callable[[Dict], object]:
        key = id(e)
        fn = self._cache.get(key)
        if fn is None:
            fn = self._compile(e)
            self._cache[key] = fn
            self._keep.append(e)
        return fn

    def _compile(self, e) -> Callable[[Dict], object]:
        op = e[0]
        if op == "const":
            v = e[1]
            return lambda env: v
        if op == "id":
            name = e[1]
            if name in self.m.defines:
                body = self.m.defines[name]
                return lambda env: self.compile(body)(env)
            if name in self.m.domains:
                return lambda env: env[name]
            return lambda env: name  # enum constant
        if op == "next":
            raise ValueError("next() outside a TRANS assignment")
        if op == "!":
            a = self.compile(e[1])
            return lambda env: not a(env)
        if op == "case":
            arms = [(self.compile(c), self.compile(v)) for c, v in e[1]]

            def case(env):
                for c, v in arms:
                    if c(env):
                        return v(env)
                raise ValueError("case without a matching arm")
            return case
        a, b = self.compile(e[1]), self.compile(e[2])
        table = {
            "&": lambda env: a(env) and b(env),
            "|": lambda env: a(env) or b(env),
            "->": lambda env: (not a(env)) or b(env),
            "<->": lambda env: a(env) == b(env),
            "=": lambda env: a(env) == b(env),
            "!=": lambda env: a(env) != b(env),
            "<": lambda env: a(env) < b(env),
            "<=": lambda env: a(env) <= b(env),
            ">": lambda env: a(env) > b(env),
            ">=": lambda env: a(env) >= b(env),
            "+": lambda env: a(env) + b(env),
            "-": lambda env: a(env) - b(env),
        }
        if op not in table:
            raise ValueError(f"operator {op} is not a state expression")
        return table[op]

    # -- initial states ----------------------------------------------------

    def initial(self) -> Set[State]:
        fixed = {v: self.value(e, {}) for v, e in self.m.init_assign.items()}
        free = [v for v in self.vars if v not in fixed]
        alts: List[Dict] = [{}]
        for c in self.m.init:
            # INIT is emitted as a disjunction of conjunctions of equalities
            alts = [dict(a, **d) for a in alts for d in _dnf_equalities(c)]
        out = set()
        for a in alts:
            vals = dict(fixed)
            vals.update(a)
            missing = [v for v in free if v not in vals]
            if missing:
                raise ValueError(f"initial value of {missing} not determined")
            if self._invariant_ok(vals):
                out.add(tuple(vals[v] for v in self.vars))
        return out

    def _invariant_ok(self, vals: Dict) -> bool:
        return any(all(self.value(c, dict(vals, sched=s)) for c in self.m.invar)
                   for s in self.sched_dom) if self.sched_dom else True

    # -- successors --------------------------------------------------------

    def successors(self, st: State) -> Set[State]:
        cur = dict(zip(self.vars, st))
        out = set()
        for s in self.sched_dom:
            env = dict(cur, sched=s)
            if not all(self.value(c, env) for c in self.m.invar):
                continue
            for t in self.m.trans:
                for arm in self._arms(t, env):
                    nxt = self._fire(arm, env)
                    if nxt is not None and self._invariant_ok(nxt):
                        out.add(tuple(nxt[v] for v in self.vars))
        return out

    def _arms(self, t, env):
        """Disjuncts of the TRANS arm selected by the scheduler."""
        if t[0] != "case":
            return _disjuncts(t)
        for c, v in t[1]:
            if self.value(c, env):
                return _disjuncts(v)
        return []

    def _fire(self, arm, env) -> Optional[Dict]:
        steps = self._arm_cache.get(id(arm))
        if steps is None:
            steps = [(c[1][1], self.compile(c[2])) if c[0] == "=" and c[1][0] == "next"
                     else (None, self.compile(c)) for c in _conjuncts(arm)]
            self._arm_cache[id(arm)] = steps
            self._keep.append(arm)
        nxt: Dict = {}
        for target, fn in steps:
            if target is not None:
                nxt[target] = fn(env)
            elif not fn(env):
                return None
        if set(nxt) != set(self.vars):
            raise ValueError(f"transition leaves {set(self.vars) - set(nxt)} unconstrained")
        return nxt

    def explore(self, limit: int = 200_000):
        init = self.initial()
        seen: Dict[State, int] = {}
        order: List[State] = []
        edges: Dict[int, Set[int]] = {}
        stack = sorted(init, key=repr)
        for s in stack:
            seen[s] = len(order)
            order.append(s)
        k = 0
        while k < len(order):
            s = order[k]
            succ = set()
            for t in self.successors(s):
                if t not in seen:
                    if len(order) >= limit:
                        raise RuntimeError("state limit")
                    seen[t] = len(order)
                    order.append(t)
                succ.add(seen[t])
            edges[k] = succ
            k += 1
        return ExploredGraph(self, order, edges, {seen[s] for s in init})


@dataclass
class ExploredGraph:
    interp: Interpreter
    states: List[State]
    edges: Dict[int, Set[int]]
    initial: Set[int]

    def valuations(self) -> List[Dict]:
        return [dict(zip(self.interp.vars, s)) for s in self.states]

    def sat(self, f) -> FrozenSet[int]:
        return frozenset(_ctl(self, f))

    def holds(self, f) -> bool:
        return self.initial <= self.sat(f)


def _ctl(g: ExploredGraph, f) -> Set[int]:
    n = len(g.states)
    allst = set(range(n))
    op = f[0]
    if op in ("!",):
        return allst - _ctl(g, f[1])
    if op in ("&", "|", "->", "<->") and _temporal(f):
        a, b = _ctl(g, f[1]), _ctl(g, f[2])
        if op == "&":
            return a & b
        if op == "|":
            return a | b
        if op == "->":
            return (allst - a) | b
        return {s for s in allst if (s in a) == (s in b)}
    if op in ("EX", "AX", "EF", "AF", "EG", "AG", "EU", "AU"):
        pre_e = lambda z: {s for s in allst if g.edges[s] & z}
        pre_a = lambda z: {s for s in allst if g.edges[s] <= z}
        if op == "EX":
            return pre_e(_ctl(g, f[1]))
        if op == "AX":
            return pre_a(_ctl(g, f[1]))
        if op in ("EU", "AU"):
            p, q = _ctl(g, f[1]), _ctl(g, f[2])
        elif op in ("EF", "AF"):
            p, q = allst, _ctl(g, f[1])
        else:
            p = _ctl(g, f[1])
        if op in ("EF", "AF", "EU", "AU"):
            pre = pre_e if op[0] == "E" else pre_a
            z: Set[int] = set()
            while True:
                nz = q | (p & pre(z))
                if nz == z:
                    return z
                z = nz
        pre = pre_e if op == "EG" else pre_a
        z = set(p)
        while True:
            nz = p & pre(z)
            if nz == z:
                return z
            z = nz
    vals = g.valuations()
    return {i for i in allst if g.interp.value(f, vals[i])}


def _temporal(f) -> bool:
    if not isinstance(f, tuple):
        return False
    if f[0] in ("EX", "AX", "EF", "AF", "EG", "AG", "EU", "AU"):
        return True
    return any(_temporal(a) for a in f[1:] if isinstance(a, tuple))


def _disjuncts(e) -> List:
    if e[0] == "|":
        return _disjuncts(e[1]) + _disjuncts(e[2])
    return [e]


def _conjuncts(e) -> List:
    if e[0] == "&":
        return _conjuncts(e[1]) + _conjuncts(e[2])
    return [e]


def _dnf_equalities(e) -> List[Dict]:
    out = []
    for d in _disjuncts(e):
        vals = {}
        for c in _conjuncts(d):
            if c[0] != "=" or c[1][0] != "id":
                raise ValueError("INIT is not a disjunction of equalities")
            rhs = c[2]
            vals[c[1][1]] = rhs[1] if rhs[0] in ("const", "id") else None
        out.append(vals)
    return out


def run(text: str, limit: int = 200_000) -> ExploredGraph:
    return Interpreter(parse(text)).explore(limit)
