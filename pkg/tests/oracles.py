"""Independent reference implementations used as test oracles.

Everything here works on plain Python dictionaries and sets and shares no
code with the engine beyond the IR node classes: a tree-walking expression
evaluator, a breadth-first LTS constructor, a naive CTL labeller, and
random generators for compositions, transition graphs and formulas.
"""
from __future__ import annotations

import itertools
import random
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

import numpy as np

from ssiv import ir
from ssiv.core.compose import Composition, compose_async
from ssiv.core.graph import GraphTransition, SystemGraph
from ssiv.core.layout import Layout
from ssiv.core.lts import Lts, flatten
from ssiv.ir import At, Const, Op, PropRef, Temporal, Var

BOOL, STRING, SET = ir.BOOL, ir.STRING, ir.SET


class OracleDomainError(Exception):
    pass


# -- expression evaluation ----------------------------------------------------


def evaluate(e, st: Dict[str, object], universe: Sequence[str]):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return st[e.name]
    if isinstance(e, At):
        return st[e.alias] == e.declarator
    if isinstance(e, PropRef):
        return evaluate(e.body, st, universe)
    if isinstance(e, Temporal):
        raise ValueError("temporal operator in a state expression")
    op, args = e.op, e.args
    if op == "not":
        return not evaluate(args[0], st, universe)
    if op == "and":
        return evaluate(args[0], st, universe) and evaluate(args[1], st, universe)
    if op == "or":
        return evaluate(args[0], st, universe) or evaluate(args[1], st, universe)
    if op == "implies":
        return (not evaluate(args[0], st, universe)) or evaluate(args[1], st, universe)
    vals = [evaluate(a, st, universe) for a in args]
    if op == "iff":
        return vals[0] == vals[1]
    if op == "eq":
        return vals[0] == vals[1]
    if op == "ne":
        return vals[0] != vals[1]
    if op == "lt":
        return vals[0] < vals[1]
    if op == "le":
        return vals[0] <= vals[1]
    if op == "gt":
        return vals[0] > vals[1]
    if op == "ge":
        return vals[0] >= vals[1]
    if op == "in":
        return vals[0] in vals[1]
    if op == "hash":
        h = ir.hash_value(vals[0])
        return h if h in universe else None
    if op == "setlit":
        return frozenset(v for v in vals if v is not None)
    if op in ("add", "sub"):
        a, b = vals
        if isinstance(a, int) and not isinstance(a, bool):
            return a + b if op == "add" else a - b
        other = frozenset([b]) if isinstance(b, str) else b
        return a | other if op == "add" else a - other
    raise ValueError(f"operator {op}")


def _check_value(name: str, t: ir.Type, v, universe) -> None:
    if t.kind == "int" and not t.lo <= v <= t.hi:
        raise OracleDomainError(f"{name}={v}")
    if t.kind == "string" and v not in universe:
        raise OracleDomainError(f"{name}={v}")


# -- brute-force LTS ------------------------------------------------------------


def _domain(t: ir.Type, universe: Sequence[str]) -> List:
    if t.kind == "bool":
        return [False, True]
    if t.kind == "int":
        return list(range(t.lo, t.hi + 1))
    if t.kind == "string":
        return list(universe)
    return [frozenset(c) for r in range(len(universe) + 1)
            for c in itertools.combinations(universe, r)]


def _default(t: ir.Type, universe: Sequence[str]):
    return {"bool": False, "int": t.lo, "string": universe[0], "set": frozenset()}[t.kind]


def _key(st: Dict[str, object]) -> Tuple:
    return tuple(sorted(st.items()))


def initial_states(comp: Composition) -> List[Dict[str, object]]:
    u = comp.universe
    base: Dict[str, object] = {k: c.value for k, c in comp.env_init.items()}
    for g in comp.instances:
        base[g.alias] = g.initial
        for v, t in g.local_vars.items():
            base[v] = _default(t, u)
    states = [base]
    for g in comp.instances:
        assigned = {v for v, _ in g.declarators[g.initial]}
        if g.init_guard != ir.TRUE:
            free = [v for v in g.local_vars if v not in assigned]
            expanded = []
            for st in states:
                for combo in itertools.product(*[_domain(g.local_vars[v], u) for v in free]):
                    expanded.append(dict(st, **dict(zip(free, combo))))
            states = expanded
        nxt = []
        for st in states:
            new = dict(st)
            for v, e in g.declarators[g.initial]:
                new[v] = evaluate(e, st, u)
            if g.init_guard == ir.TRUE or evaluate(g.init_guard, new, u):
                nxt.append(new)
        states = nxt
    uniq = {}
    for st in states:
        uniq.setdefault(_key(st), st)
    return list(uniq.values())


def successors(comp: Composition, st: Dict[str, object]) -> List[Tuple[str, Dict[str, object]]]:
    """(label, successor) for every enabled transition of every instance."""
    u = comp.universe
    types = comp.variables
    out = []
    for g in comp.instances:
        for t in g.transitions:
            if st[g.alias] != t.src or not evaluate(t.guard, st, u):
                continue
            new = dict(st)
            for v, e in list(t.writes) + list(g.declarators[t.dst]):
                val = evaluate(e, st, u)
                _check_value(v, types[v], val, u)
                new[v] = val
            new[g.alias] = t.dst
            label = f"{g.alias}.{t.action}" if t.action is not None else "eps"
            out.append((label, new))
    return out


class BruteLts:
    def __init__(self, comp: Composition, limit: int = 100_000):
        self.comp = comp
        init = initial_states(comp)
        self.states: Dict[Tuple, Dict[str, object]] = {}
        self.initial = {_key(s) for s in init}
        self.transitions: Set[Tuple] = set()
        self.deadlocks: Set[Tuple] = set()
        queue = list(init)
        for s in init:
            self.states[_key(s)] = s
        while queue:
            st = queue.pop()
            k = _key(st)
            succ = successors(comp, st)
            if not succ:
                self.deadlocks.add(k)
            for label, new in succ:
                nk = _key(new)
                self.transitions.add((k, label, nk))
                if nk not in self.states:
                    if len(self.states) >= limit:
                        raise RuntimeError("oracle state limit")
                    self.states[nk] = new
                    queue.append(new)

    def state_set(self) -> FrozenSet:
        return frozenset(self.states)

    def labels(self, atom) -> Dict[Tuple, bool]:
        return {k: bool(evaluate(atom, s, self.comp.universe)) for k, s in self.states.items()}


# -- random compositions --------------------------------------------------------


UNIVERSE = ("NONE", "A", "B", "C")


class _Gen:
    def __init__(self, rng: random.Random, env: Dict[str, ir.Type]):
        self.rng = rng
        self.env = env

    def vars_of(self, scope: Dict[str, ir.Type], kind: str) -> List[Tuple[str, ir.Type]]:
        return [(n, t) for n, t in scope.items() if t.kind == kind]

    def value(self, t: ir.Type, scope: Dict[str, ir.Type]):
        rng = self.rng
        same = [Var(n, tt) for n, tt in scope.items() if tt == t]
        if same and rng.random() < 0.4:
            return rng.choice(same)
        if t.kind == "bool":
            return Const(rng.random() < 0.5, BOOL)
        if t.kind == "int":
            return Const(rng.randint(t.lo, t.hi), t)
        if t.kind == "string":
            return Const(rng.choice(UNIVERSE), STRING)
        sets = [Var(n, tt) for n, tt in scope.items() if tt.kind == "set"]
        base = rng.choice(sets) if sets and rng.random() < 0.7 else Const(frozenset(), SET)
        op = rng.choice(["add", "sub", "lit"])
        if op == "lit":
            items = rng.sample(UNIVERSE, rng.randint(0, 2))
            return Op("setlit", tuple(Const(x, STRING) for x in items), SET)
        return Op(op, (base, self.value(STRING, scope)), SET)

    def atom(self, scope: Dict[str, ir.Type], locs: Dict[str, List[str]]):
        rng = self.rng
        choice = rng.randrange(5)
        if choice == 0 and locs:
            alias = rng.choice(sorted(locs))
            return At(alias, rng.choice(locs[alias]))
        kinds = {t.kind for t in scope.values()}
        if choice == 1 and "bool" in kinds:
            n, t = rng.choice(self.vars_of(scope, "bool"))
            return Var(n, t)
        if choice == 2 and "int" in kinds:
            n, t = rng.choice(self.vars_of(scope, "int"))
            op = rng.choice(["lt", "le", "gt", "ge", "eq", "ne"])
            return Op(op, (Var(n, t), Const(rng.randint(t.lo, t.hi), t)), BOOL)
        if choice == 3 and "set" in kinds:
            n, t = rng.choice(self.vars_of(scope, "set"))
            return Op("in", (self.value(STRING, scope), Var(n, t)), BOOL)
        if "string" in kinds:
            n, t = rng.choice(self.vars_of(scope, "string"))
            return Op(rng.choice(["eq", "ne"]), (Var(n, t), self.value(STRING, scope)), BOOL)
        return Const(rng.random() < 0.7, BOOL)

    def guard(self, scope, locs, depth: int = 2):
        rng = self.rng
        r = rng.random()
        if depth == 0 or r < 0.45:
            return ir.TRUE if r < 0.15 else self.atom(scope, locs)
        if r < 0.6:
            return Op("not", (self.guard(scope, locs, depth - 1),), BOOL)
        op = rng.choice(["and", "or", "implies"])
        return Op(op, (self.guard(scope, locs, depth - 1), self.guard(scope, locs, depth - 1)), BOOL)

    def writes(self, scope: Dict[str, ir.Type], k: int):
        names = self.rng.sample(sorted(scope), min(k, len(scope)))
        return tuple((n, self.value(scope[n], scope)) for n in names)


def random_composition(seed: int) -> Composition:
    """A small random composition of 1-3 instances over a random environment."""
    rng = random.Random(seed)
    env_pool = {"eb": BOOL, "ei": ir.int_type(0, 2), "es": STRING, "ez": SET}
    env = {n: t for n, t in env_pool.items() if rng.random() < 0.6} or {"eb": BOOL}
    gen = _Gen(rng, env)
    aliases = ["p", "q", "r"][:rng.randint(1, 3)]
    locs = {a: [f"S{i}" for i in range(rng.randint(1, 4))] for a in aliases}
    instances = []
    for alias in aliases:
        local_pool = {f"{alias}.b": BOOL, f"{alias}.i": ir.int_type(0, 1),
                      f"{alias}.s": STRING, f"{alias}.z": SET}
        local = {n: t for n, t in local_pool.items() if rng.random() < 0.4}
        scope = dict(env)
        scope.update(local)
        decls = {d: gen.writes(scope, rng.randint(0, 2)) for d in locs[alias]}
        trans = []
        for _ in range(rng.randint(1, 5)):
            src, dst = rng.choice(locs[alias]), rng.choice(locs[alias])
            action = rng.choice([None, "a", "b", "c"])
            writes = gen.writes(scope, rng.randint(0, 2)) if action else ()
            trans.append(GraphTransition(src, gen.guard(scope, locs), action, dst, writes))
        init_guard = ir.TRUE
        if local and rng.random() < 0.25:
            init_guard = gen.guard(local, {})
        clauses = {f"{alias}.c{j}": PropRef(f"{alias}.c{j}", gen.guard(scope, locs))
                   for j in range(rng.randint(0, 2))}
        instances.append(SystemGraph(
            name=f"Sys_{alias}", alias=alias, params=(), local_vars=local, env_name="Env",
            env_vars=dict(env), declarators=decls, transitions=tuple(trans),
            initial=locs[alias][0], init_guard=init_guard, clauses=clauses))
    env_init = {n: _random_const(rng, t) for n, t in env.items()}
    return compose_async(instances, env_init, env, UNIVERSE)


def _random_const(rng: random.Random, t: ir.Type) -> Const:
    if t.kind == "bool":
        return Const(rng.random() < 0.5, t)
    if t.kind == "int":
        return Const(rng.randint(t.lo, t.hi), t)
    if t.kind == "string":
        return Const(rng.choice(UNIVERSE), t)
    return Const(frozenset(rng.sample(UNIVERSE, rng.randint(0, 2))), t)


# -- explicit graphs for CTL ------------------------------------------------------


PROPS = ("p", "q", "r")


def graph_composition(n: int) -> Composition:
    """A one-instance composition whose variables carry an explicit graph's labels."""
    env = {"s": ir.int_type(0, max(n - 1, 0)), "p": BOOL, "q": BOOL, "r": BOOL}
    g = SystemGraph(name="G", alias="k", params=(), local_vars={}, env_name="Env",
                    env_vars=dict(env), declarators={"X": ()},
                    transitions=(GraphTransition("X", ir.TRUE, None, "X"),), initial="X")
    init = {"s": Const(0, env["s"]), "p": ir.FALSE, "q": ir.FALSE, "r": ir.FALSE}
    return compose_async([g], init, env, ("NONE",))


def build_lts(n: int, edges: Sequence[Tuple[int, int]], labels: Sequence[Dict[str, bool]],
              initial: Sequence[int] = (0,)) -> Lts:
    """An Lts over states 0..n-1 with the given edges; every state must be reachable."""
    comp = graph_composition(n)
    layout = Layout(comp)
    rows = np.stack([layout.encode(dict(labels[i], s=i, k="X")) for i in range(n)])
    edges = sorted(set(edges))
    src = np.array([a for a, _ in edges], dtype=np.int64)
    dst = np.array([b for _, b in edges], dtype=np.int64)
    tid = np.zeros(len(edges), dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    pedge = np.full(n, -1, dtype=np.int64)
    depth = np.full(n, -1, dtype=np.int64)
    adj: Dict[int, List[int]] = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
    frontier = list(initial)
    for i in frontier:
        depth[i] = 0
    while frontier:
        nxt = []
        for a in frontier:
            for b in adj.get(a, ()):
                if depth[b] < 0:
                    depth[b] = depth[a] + 1
                    parent[b] = a
                    pedge[b] = 0
                    nxt.append(b)
        frontier = nxt
    assert (depth >= 0).all(), "unreachable states"
    return Lts(comp, layout, rows, np.array(sorted(initial), dtype=np.int64), src, dst, tid,
               flatten(comp), parent, pedge, depth)


def random_graph(rng: random.Random, n: int, degree: float = 2.0):
    """Random total graph on n states, all reachable from state 0, with random labels."""
    edges = set()
    for i in range(1, n):
        edges.add((rng.randrange(i), i))
    for i in range(n):
        if not any(a == i for a, _ in edges) or rng.random() < 0.5:
            edges.add((i, rng.randrange(n)))
    for _ in range(int(n * (degree - 1))):
        edges.add((rng.randrange(n), rng.randrange(n)))
    bias = {p: rng.random() for p in PROPS}
    labels = [{p: rng.random() < bias[p] for p in PROPS} for _ in range(n)]
    return sorted(edges), labels


def random_ctl(rng: random.Random, depth: int):
    """A random CTL formula over p, q, r with nesting depth at most `depth`."""
    if depth == 0 or rng.random() < 0.2:
        if rng.random() < 0.1:
            return ir.TRUE if rng.random() < 0.5 else ir.FALSE
        return Var(rng.choice(PROPS), BOOL)
    k = rng.randrange(13)
    if k < 8:
        op = ["EX", "AX", "EF", "AF", "EG", "AG", "EU", "AU"][k]
        if op in ("EU", "AU"):
            return Temporal(op, (random_ctl(rng, depth - 1), random_ctl(rng, depth - 1)))
        return Temporal(op, (random_ctl(rng, depth - 1),))
    if k == 8:
        return Op("not", (random_ctl(rng, depth - 1),), BOOL)
    op = ["and", "or", "implies", "iff"][k - 9]
    return Op(op, (random_ctl(rng, depth - 1), random_ctl(rng, depth - 1)), BOOL)


# -- naive CTL labelling ---------------------------------------------------------


def naive_sat(n: int, succ: Dict[int, Set[int]], labels: Sequence[Dict[str, bool]], f) -> Set[int]:
    """States satisfying `f`, computed straight from the fixpoint characterizations."""
    every = set(range(n))

    def ex(z):
        return {s for s in every if succ[s] & z}

    def ax(z):
        return {s for s in every if succ[s] <= z}

    def lfp(step):
        z: Set[int] = set()
        while True:
            nz = step(z)
            if nz == z:
                return z
            z = nz

    def gfp(step):
        z = set(every)
        while True:
            nz = step(z)
            if nz == z:
                return z
            z = nz

    def sat(f) -> Set[int]:
        if isinstance(f, Const):
            return set(every) if f.value else set()
        if isinstance(f, Var):
            return {s for s in every if labels[s][f.name]}
        if isinstance(f, Op):
            a = [sat(x) for x in f.args]
            if f.op == "not":
                return every - a[0]
            if f.op == "and":
                return a[0] & a[1]
            if f.op == "or":
                return a[0] | a[1]
            if f.op == "implies":
                return (every - a[0]) | a[1]
            if f.op == "iff":
                return {s for s in every if (s in a[0]) == (s in a[1])}
        if isinstance(f, Temporal):
            op = f.op
            a = [sat(x) for x in f.args]
            if op == "EX":
                return ex(a[0])
            if op == "AX":
                return ax(a[0])
            if op == "EF":
                return lfp(lambda z: a[0] | ex(z))
            if op == "AF":
                return lfp(lambda z: a[0] | ax(z))
            if op == "EG":
                return gfp(lambda z: a[0] & ex(z))
            if op == "AG":
                return gfp(lambda z: a[0] & ax(z))
            if op == "EU":
                return lfp(lambda z: a[1] | (a[0] & ex(z)))
            if op == "AU":
                return lfp(lambda z: a[1] | (a[0] & ax(z)))
        raise ValueError(f"unexpected node {f!r}")

    return sat(f)


def successor_map(n: int, edges: Sequence[Tuple[int, int]]) -> Dict[int, Set[int]]:
    out: Dict[int, Set[int]] = {i: set() for i in range(n)}
    for a, b in edges:
        out[a].add(b)
    return out
