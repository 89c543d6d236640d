"""Witness and counterexample extraction, trace serialization and replay."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .. import ir
from ..core.compose import Composition
from ..core.layout import Layout
from ..core.lts import Lts, Stepper
from ..errors import CounterexampleError, ReplayMismatch
from ..ir import Expr, Op, Temporal
from .ctl import CtlChecker, _not


@dataclass(frozen=True)
class Step:
    """One state of a trace and the transition that produced it (None for the first)."""
    state_id: int
    state: Dict[str, object]
    transition: Optional[int] = None
    instance: Optional[str] = None
    action: Optional[str] = None
    src: Optional[str] = None
    dst: Optional[str] = None

    def to_json(self) -> dict:
        out = {"id": self.state_id, "state": {k: _jsonable(v) for k, v in self.state.items()}}
        if self.transition is not None:
            out["fired"] = {"transition": self.transition, "instance": self.instance,
                            "action": self.action, "src": self.src, "dst": self.dst}
        return out

    @classmethod
    def from_json(cls, d: dict) -> "Step":
        state = {k: frozenset(v) if isinstance(v, list) else v for k, v in d["state"].items()}
        f = d.get("fired")
        if f is None:
            return cls(d["id"], state)
        return cls(d["id"], state, f["transition"], f["instance"], f["action"], f["src"],
                   f["dst"])


def _jsonable(v):
    return sorted(v) if isinstance(v, frozenset) else v


@dataclass(frozen=True)
class Trace:
    """A finite prefix, optionally closed by a cycle back to the last prefix state.

    The cycle lists the states after the last prefix state; its final entry
    is that state again.
    """
    prefix: Tuple[Step, ...]
    cycle: Tuple[Step, ...] = ()

    @property
    def is_lasso(self) -> bool:
        return bool(self.cycle)

    @property
    def last(self) -> Step:
        return self.prefix[-1]

    @property
    def steps(self) -> Tuple[Step, ...]:
        return self.prefix + self.cycle

    def __len__(self) -> int:
        return len(self.prefix) - 1 + len(self.cycle)

    def to_json(self) -> dict:
        return {"prefix": [s.to_json() for s in self.prefix],
                "cycle": [s.to_json() for s in self.cycle]}

    @classmethod
    def from_json(cls, d: dict) -> "Trace":
        return cls(tuple(Step.from_json(s) for s in d["prefix"]),
                   tuple(Step.from_json(s) for s in d.get("cycle", ())))

    def text(self) -> str:
        lines = []
        prev: Dict[str, object] = {}
        for i, s in enumerate(self.steps):
            if i == len(self.prefix):
                lines.append("-- loop starts here")
            head = f"state {i} (id {s.state_id})"
            if s.transition is not None:
                act = s.action if s.action is not None else "eps"
                head += f" <- {s.instance}: {s.src} -{act}-> {s.dst}"
            lines.append(head)
            for k, v in s.state.items():
                if i == 0 or prev.get(k) != v:
                    lines.append(f"  {k} = {v if isinstance(v, str) else ir.show_value(v)}")
            prev = s.state
        return "\n".join(lines) + "\n"


# -- path search -------------------------------------------------------------


def shortest_path(lts: Lts, start: int, target: np.ndarray,
                  allowed: Optional[np.ndarray] = None) -> Optional[List[Tuple[int, int]]]:
    """Shortest path from `start` to a `target` state through `allowed` states.

    Returns [(state, edge)] where edge is the transition-array index used to
    enter the state (-1 for `start`).  Ties go to the lowest state ids: each
    state's parent is the lowest-id frontier state reaching it and the
    lowest-id target of the first level containing one is chosen.
    """
    if target[start]:
        return [(start, -1)]
    if allowed is not None and not allowed[start]:
        return None
    ptr, succ, edges = lts.forward
    parent = {start: (-1, -1)}
    seen = np.zeros(lts.num_states, dtype=bool)
    seen[start] = True
    frontier = np.array([start], dtype=np.int64)
    while frontier.size:
        starts = ptr[frontier]
        counts = ptr[frontier + 1] - starts
        total = int(counts.sum())
        if total == 0:
            return None
        owner = np.repeat(frontier, counts)
        offs = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        idx = np.repeat(starts, counts) + offs
        nxt, via = succ[idx], edges[idx]
        fresh = ~seen[nxt]
        nxt, via, owner = nxt[fresh], via[fresh], owner[fresh]
        if nxt.size == 0:
            return None
        # lowest owner wins, then lowest edge index
        order = np.lexsort((via, owner, nxt))
        nxt, via, owner = nxt[order], via[order], owner[order]
        first = np.ones(nxt.size, dtype=bool)
        first[1:] = nxt[1:] != nxt[:-1]
        nxt, via, owner = nxt[first], via[first], owner[first]
        for n, e, o in zip(nxt.tolist(), via.tolist(), owner.tolist()):
            parent[n] = (o, e)
        seen[nxt] = True
        hits = nxt[target[nxt]]
        if hits.size:
            node = int(hits.min())
            path = []
            while node != -1:
                o, e = parent[node]
                path.append((node, e))
                node = o
            return path[::-1]
        if allowed is not None:
            nxt = nxt[allowed[nxt]]
        frontier = nxt
    return None


def lasso(lts: Lts, start: int, region: np.ndarray):
    """Lasso from `start` staying inside `region`, in which every state has a successor.

    Walks to the lowest-id successor inside the region until a state repeats.
    Returns (prefix, cycle) as [(state, edge)] lists; the cycle ends at the
    state where it began, which is the last prefix state.
    """
    ptr, succ, edges = lts.forward
    path = [(start, -1)]
    pos = {start: 0}
    cur = start
    while True:
        lo, hi = ptr[cur], ptr[cur + 1]
        cand = succ[lo:hi]
        ok = np.flatnonzero(region[cand])
        if ok.size == 0:
            raise CounterexampleError(f"state {cur} has no successor inside the lasso region")
        j = ok[np.argmin(cand[ok])]
        nxt, e = int(cand[j]), int(edges[lo + j])
        if nxt in pos:
            k = pos[nxt]
            prefix = path[:k + 1]
            cycle = path[k + 1:] + [(nxt, e)]
            return prefix, cycle
        pos[nxt] = len(path)
        path.append((nxt, e))
        cur = nxt


# -- evidence ----------------------------------------------------------------

_Path = List[Tuple[int, int]]


class _Evidence:
    def __init__(self, lts: Lts, checker: CtlChecker):
        self.lts = lts
        self.ck = checker

    def sat(self, f: Expr) -> np.ndarray:
        return self.ck.sat(f)

    @staticmethod
    def join(path: _Path, rest: Tuple[_Path, _Path]) -> Tuple[_Path, _Path]:
        sub_prefix, sub_cycle = rest
        return path + sub_prefix[1:], sub_cycle

    def cex(self, f: Expr, s: int) -> Tuple[_Path, _Path]:
        """Evidence that `s` violates `f`."""
        while isinstance(f, ir.PropRef):
            f = f.body
        if not ir.is_temporal(f):
            return [(s, -1)], []
        if isinstance(f, Op):
            if f.op == "not":
                return self.wit(f.args[0], s)
            if f.op == "and":
                a, b = f.args
                return self.cex(a, s) if not self.sat(a)[s] else self.cex(b, s)
            if f.op == "or":
                a, b = f.args
                return self.cex(a if ir.is_temporal(a) else b, s)
            if f.op == "implies":
                return self.cex(f.args[1], s)
            return [(s, -1)], []
        op, args = f.op, f.args
        if op == "AX":
            return self._one_step(s, ~self.sat(args[0]), args[0], self.cex)
        if op == "AG":
            path = shortest_path(self.lts, s, ~self.sat(args[0]))
            return self.join(path, self.cex(args[0], path[-1][0]))
        if op == "AF":
            region = self.sat(Temporal("EG", (_not(args[0]),)))
            return lasso(self.lts, s, region)
        if op == "AU":
            p, q = self.sat(args[0]), self.sat(args[1])
            path = shortest_path(self.lts, s, ~p & ~q, allowed=p & ~q)
            if path is not None:
                return path, []
            region = self.sat(Temporal("EG", (_and(args[0], _not(args[1])),)))
            return lasso(self.lts, s, region)
        # existential operators fail on every path; the state itself is the evidence
        return [(s, -1)], []

    def _one_step(self, s, target, sub, fn):
        ptr, succ, edges = self.lts.forward
        lo, hi = ptr[s], ptr[s + 1]
        cand = succ[lo:hi]
        ok = np.flatnonzero(target[cand])
        j = ok[np.argmin(cand[ok])]
        path = [(s, -1), (int(cand[j]), int(edges[lo + j]))]
        return self.join(path, fn(sub, path[-1][0]))

    def wit(self, f: Expr, s: int) -> Tuple[_Path, _Path]:
        """Evidence that `s` satisfies `f`."""
        while isinstance(f, ir.PropRef):
            f = f.body
        if not ir.is_temporal(f):
            return [(s, -1)], []
        if isinstance(f, Op):
            if f.op == "not":
                return self.cex(f.args[0], s)
            if f.op == "and":
                a, b = f.args
                return self.wit(a if ir.is_temporal(a) else b, s)
            if f.op == "or":
                a, b = f.args
                return self.wit(a, s) if self.sat(a)[s] else self.wit(b, s)
            if f.op == "implies":
                a, b = f.args
                return self.cex(a, s) if not self.sat(a)[s] else self.wit(b, s)
            return [(s, -1)], []
        op, args = f.op, f.args
        if op == "EX":
            return self._one_step(s, self.sat(args[0]), args[0], self.wit)
        if op == "EF":
            path = shortest_path(self.lts, s, self.sat(args[0]))
            return self.join(path, self.wit(args[0], path[-1][0]))
        if op == "EU":
            path = shortest_path(self.lts, s, self.sat(args[1]), allowed=self.sat(args[0]))
            return self.join(path, self.wit(args[1], path[-1][0]))
        if op == "EG":
            return lasso(self.lts, s, self.sat(f))
        if op == "AF":
            # every path reaches q, so show the nearest q-state
            path = shortest_path(self.lts, s, self.sat(args[0]))
            return self.join(path, self.wit(args[0], path[-1][0]))
        # other universal operators hold on every path; the state itself is the evidence
        return [(s, -1)], []


def _and(a: Expr, b: Expr) -> Expr:
    return Op("and", (a, b), ir.BOOL)


def _to_trace(lts: Lts, prefix: _Path, cycle: _Path) -> Trace:
    def step(sid: int, e: int) -> Step:
        state = lts.state(sid)
        if e < 0:
            return Step(sid, state)
        t = lts.transitions[int(lts.tid[e])]
        return Step(sid, state, t.index, t.alias, t.action, t.src, t.dst)

    # prepend the breadth-first path from an initial state when needed
    head: _Path = []
    first = prefix[0][0]
    if first not in set(lts.initial.tolist()):
        head = _path_from_initial(lts, first)
        prefix = head[:-1] + prefix
        prefix[len(head) - 1] = head[-1]
    return Trace(tuple(step(s, e) for s, e in prefix), tuple(step(s, e) for s, e in cycle))


def _path_from_initial(lts: Lts, sid: int) -> _Path:
    out = []
    node = sid
    while node >= 0:
        par = int(lts.parent[node])
        tid = int(lts.parent_edge[node])
        if par < 0:
            out.append((node, -1))
            break
        # locate the transition-array entry for (par, tid)
        ptr, succ, edges = lts.forward
        lo, hi = ptr[par], ptr[par + 1]
        cand = edges[lo:hi]
        e = int(cand[(lts.tid[cand] == tid) & (succ[lo:hi] == node)][0])
        out.append((node, e))
        node = par
    return out[::-1]


def counterexample(lts: Lts, f: Expr, bad_init: int,
                   checker: Optional[CtlChecker] = None) -> Trace:
    """Trace showing why `bad_init` violates `f`."""
    ck = checker or CtlChecker(lts)
    if ck.sat(f)[bad_init]:
        raise CounterexampleError(f"state {bad_init} satisfies {ir.show(f)}")
    prefix, cycle = _Evidence(lts, ck).cex(f, bad_init)
    return _to_trace(lts, prefix, cycle)


def witness(lts: Lts, f: Expr, init: int, checker: Optional[CtlChecker] = None) -> Trace:
    """Trace showing why `init` satisfies `f` (meaningful for existential shapes)."""
    ck = checker or CtlChecker(lts)
    if not ck.sat(f)[init]:
        raise CounterexampleError(f"state {init} does not satisfy {ir.show(f)}")
    prefix, cycle = _Evidence(lts, ck).wit(f, init)
    return _to_trace(lts, prefix, cycle)


# -- replay ------------------------------------------------------------------


def replay(trace: Trace, comp: Composition) -> bool:
    """Re-execute `trace` under the composition's semantics.

    Raises ReplayMismatch at the first step whose recorded state differs from
    the recomputed one or whose transition is not enabled.
    """
    layout = Layout(comp)
    stepper = Stepper(comp, layout)
    steps = trace.steps
    if not steps:
        raise ReplayMismatch(0, "a non-empty trace", "an empty trace")
    init = stepper.initial_rows()
    try:
        row = layout.encode(steps[0].state)
    except (KeyError, ValueError) as exc:
        raise ReplayMismatch(0, "a state of this composition", str(exc)) from exc
    if not (init == row).all(axis=1).any():
        raise ReplayMismatch(0, [layout.decode(r) for r in init], steps[0].state)
    for i, s in enumerate(steps[1:], start=1):
        if s.transition is None or not 0 <= s.transition < len(stepper.transitions):
            raise ReplayMismatch(i, "a fired transition", s.transition)
        t = stepper.transitions[s.transition]
        if (t.alias, t.src, t.dst, t.action) != (s.instance, s.src, s.dst, s.action):
            raise ReplayMismatch(i, f"{t.alias}: {t.src} -> {t.dst}",
                                 f"{s.instance}: {s.src} -> {s.dst}")
        rows = row[None, :]
        if not stepper.enabled(rows, t.index)[0]:
            raise ReplayMismatch(i, f"transition {t.label} enabled", "disabled")
        nxt = stepper.fire(rows, t.index)[0]
        expected = layout.decode(nxt)
        if expected != s.state:
            raise ReplayMismatch(i, expected, s.state)
        row = nxt
    if trace.cycle and trace.cycle[-1].state != trace.prefix[-1].state:
        raise ReplayMismatch(len(steps) - 1, trace.prefix[-1].state, trace.cycle[-1].state)
    return True
