"""Concretization of a composition into its reachable labelled transition system.

Exploration is breadth-first and level-synchronous.  Every level expands the
whole frontier transition by transition with vectorized guard and effect
evaluation, then commits new states in canonical order: by parent id, then
by global transition index.  That order does not depend on how the frontier
was split between workers, so parallel runs intern exactly the same states.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .. import ir
from ..errors import DeadlockError, StateLimitExceeded
from ..ir import Expr
from .compose import Composition
from .graph import GraphTransition
from .layout import SET_BITS, Layout

DEFAULT_MAX_STATES = 5_000_000


@dataclass(frozen=True)
class FlatTransition:
    """A transition of one instance, addressed globally."""
    index: int
    instance: int
    alias: str
    src: str
    dst: str
    action: Optional[str]
    guard: Expr
    writes: Tuple[Tuple[str, Expr], ...]

    @property
    def label(self) -> str:
        return f"{self.alias}.{self.action}" if self.action is not None else "eps"


def flatten(comp: Composition) -> Tuple[FlatTransition, ...]:
    out = []
    for k, g in enumerate(comp.instances):
        for t in g.transitions:
            out.append(FlatTransition(len(out), k, g.alias, t.src, t.dst, t.action,
                                      t.guard, t.writes))
    return tuple(out)


class _Packer:
    """Packs state rows into int64 key words for hashing and sorting."""

    def __init__(self, layout: Layout):
        bits = []
        u = len(layout.universe)
        for s in layout.slots.values():
            if s.type.kind == "set":
                for w in range(s.width):
                    bits.append((s.col + w, max(1, min(SET_BITS, u - w * SET_BITS))))
            else:
                bits.append((s.col, max(1, math.ceil(math.log2(max(s.size, 2))))))
        for alias, c in layout.loc_cols.items():
            bits.append((c, max(1, math.ceil(math.log2(max(len(layout.loc_names[alias]), 2))))))
        bits.sort()
        words: List[List[Tuple[int, int]]] = [[]]
        used = 0
        for col, b in bits:
            if used + b > 63:
                words.append([])
                used = 0
            words[-1].append((col, used))
            used += b
        self.words = words

    @property
    def nwords(self) -> int:
        return len(self.words)

    def keys(self, rows: np.ndarray) -> np.ndarray:
        out = np.zeros((rows.shape[0], len(self.words)), dtype=np.int64)
        for w, cols in enumerate(self.words):
            acc = out[:, w]
            for col, shift in cols:
                acc |= rows[:, col] << shift
        return out


class Lts:
    """Reachable labelled transition system of a composition.

    States are rows of `states` (interned ids are row indices, in breadth-first
    discovery order).  Transitions are parallel arrays `src`, `dst`, `tid`
    where `tid` indexes `transitions`; they are sorted by (src, tid, dst).
    """

    def __init__(self, comp: Composition, layout: Layout, states: np.ndarray,
                 initial: np.ndarray, src: np.ndarray, dst: np.ndarray, tid: np.ndarray,
                 transitions: Tuple[FlatTransition, ...], parent: np.ndarray,
                 parent_edge: np.ndarray, depth: np.ndarray):
        self.comp = comp
        self.layout = layout
        self.states = states
        self.initial = initial
        self.src = src
        self.dst = dst
        self.tid = tid
        self.transitions = transitions
        self.parent = parent
        self.parent_edge = parent_edge
        self.depth = depth
        self._sat_cache: Dict[Expr, np.ndarray] = {}
        self._ctl_cache: Dict[Expr, np.ndarray] = {}
        self._fwd = None
        self._bwd = None
        self.atoms = self._collect_atoms()
        for a in (self.states, self.initial, self.src, self.dst, self.tid,
                  self.parent, self.parent_edge, self.depth):
            a.setflags(write=False)

    # -- basic facts -------------------------------------------------------

    @property
    def num_states(self) -> int:
        return int(self.states.shape[0])

    @property
    def num_transitions(self) -> int:
        return int(self.src.shape[0])

    @property
    def actions(self) -> Tuple[str, ...]:
        seen: List[str] = []
        for t in self.transitions:
            if t.action is not None and t.label not in seen:
                seen.append(t.label)
        return tuple(seen)

    def _collect_atoms(self) -> Dict[str, Expr]:
        out: Dict[str, Expr] = {}
        sources = list(self.comp.clauses.values()) + [f.expr for f in self.comp.formulas]
        for e in sources:
            for a in ir.atoms(e):
                out.setdefault(ir.show(a), a)
        return out

    def state(self, i: int) -> Dict[str, object]:
        """Decoded global evaluation of state `i` (instance aliases map to declarators)."""
        return self.layout.decode(self.states[i])

    def declarators(self, i: int) -> Dict[str, str]:
        """Current declarator of every instance in state `i`."""
        row = self.states[i]
        return {alias: self.layout.loc_names[alias][int(row[c])]
                for alias, c in self.layout.loc_cols.items()}

    def eval(self, e: Expr) -> np.ndarray:
        """Boolean vector: which states satisfy the (non-temporal) expression."""
        v = self._sat_cache.get(e)
        if v is None:
            v = np.asarray(self.layout.compile(e)(self.states), dtype=bool)
            v.setflags(write=False)
            self._sat_cache[e] = v
        return v

    def labels(self, i: int) -> Tuple[str, ...]:
        return tuple(name for name, a in self.atoms.items() if self.eval(a)[i])

    def labeling(self) -> Dict[str, np.ndarray]:
        return {name: self.eval(a) for name, a in self.atoms.items()}

    # -- adjacency ---------------------------------------------------------

    def _csr(self, keys: np.ndarray, vals: np.ndarray):
        order = np.argsort(keys, kind="stable")
        counts = np.bincount(keys, minlength=self.num_states)
        ptr = np.zeros(self.num_states + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        return ptr, vals[order], order

    @property
    def forward(self):
        """(ptr, successor ids, edge ids) in CSR form."""
        if self._fwd is None:
            self._fwd = self._csr(self.src, self.dst)
        return self._fwd

    @property
    def backward(self):
        """(ptr, predecessor ids, edge ids) in CSR form."""
        if self._bwd is None:
            self._bwd = self._csr(self.dst, self.src)
        return self._bwd

    def successors(self, i: int) -> np.ndarray:
        ptr, succ, _ = self.forward
        return succ[ptr[i]:ptr[i + 1]]

    def out_edges(self, i: int) -> np.ndarray:
        ptr, _, edges = self.forward
        return edges[ptr[i]:ptr[i + 1]]

    # -- comparison views --------------------------------------------------

    def state_tuple(self, i: int) -> Tuple:
        return tuple(sorted(self.state(i).items()))

    def state_set(self) -> frozenset:
        return frozenset(self.state_tuple(i) for i in range(self.num_states))

    def transition_set(self, labels: bool = True) -> frozenset:
        tuples = [self.state_tuple(i) for i in range(self.num_states)]
        out = set()
        for s, d, t in zip(self.src.tolist(), self.dst.tolist(), self.tid.tolist()):
            tr = self.transitions[t]
            out.add((tuples[s], tr.label if labels else tr.alias, tuples[d]))
        return frozenset(out)

    def dump(self) -> str:
        """Line-oriented debug listing: ``state-id | var=val ... | labels``."""
        lines = []
        init = set(self.initial.tolist())
        for i in range(self.num_states):
            vals = " ".join(f"{k}={_fmt(v)}" for k, v in self.state(i).items())
            mark = "*" if i in init else ""
            lines.append(f"{i}{mark} | {vals} | {' '.join(self.labels(i))}")
        for s, d, t in zip(self.src.tolist(), self.dst.tolist(), self.tid.tolist()):
            lines.append(f"{s} -> {d} [{self.transitions[t].label}]")
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    return v if isinstance(v, str) else ir.show_value(v)


# -- exploration -------------------------------------------------------------


class Stepper:
    """Vectorized successor computation for one composition."""

    def __init__(self, comp: Composition, layout: Layout):
        self.comp = comp
        self.layout = layout
        self.transitions = flatten(comp)
        self.guard_fns = [layout.compile(t.guard) for t in self.transitions]
        self.loc_idx = []
        self.dst_idx = []
        self.effects = []
        for t in self.transitions:
            g = comp.instances[t.instance]
            names = layout.loc_names[g.alias]
            self.loc_idx.append((layout.loc_cols[g.alias], names.index(t.src)))
            self.dst_idx.append(names.index(t.dst))
            # Effect writes then declarator assignments, both evaluated in the
            # source state; a later entry for the same variable wins.
            merged: Dict[str, Expr] = {}
            for v, e in t.writes:
                merged[v] = e
            for v, e in g.declarators[t.dst]:
                merged[v] = e
            self.effects.append([(layout.slots[v].cols, layout.compile(e), layout.encoder(v))
                                 for v, e in merged.items()])

    def initial_rows(self) -> np.ndarray:
        lay = self.layout
        row = np.zeros(lay.width, dtype=np.int64)
        for name, c in self.comp.env_init.items():
            s = lay.slots[name]
            row[s.cols] = lay.encode_value(s, c.value)
        rows = row[None, :]
        for g in self.comp.instances:
            rows = rows.copy()
            rows[:, lay.loc_cols[g.alias]] = lay.loc_names[g.alias].index(g.initial)
            assigned = {v for v, _ in g.declarators[g.initial]}
            if g.init_guard != ir.TRUE:
                free = [v for v in g.local_vars if v not in assigned]
                rows = self._enumerate(rows, free)
            rows = self._apply(rows, [(lay.slots[v].cols, lay.compile(e), lay.encoder(v))
                                      for v, e in g.declarators[g.initial]])
            if g.init_guard != ir.TRUE:
                rows = rows[np.asarray(lay.compile(g.init_guard)(rows), dtype=bool)]
        return _unique_rows(rows)

    def _enumerate(self, rows: np.ndarray, names: Sequence[str]) -> np.ndarray:
        lay = self.layout
        for v in names:
            s = lay.slots[v]
            if s.type.kind == "set":
                n = len(lay.universe)
                values = [lay.encode_value(s, frozenset(c)) for r in range(n + 1)
                          for c in itertools.combinations(lay.universe, r)]
            else:
                values = [[code] for code in range(s.size)]
            values = np.asarray(values, dtype=np.int64)
            rep = np.repeat(rows, len(values), axis=0)
            rep[:, s.cols] = np.tile(values, (rows.shape[0], 1))
            rows = rep
        return rows

    @staticmethod
    def _apply(rows: np.ndarray, effects) -> np.ndarray:
        out = rows.copy()
        for cols, fn, enc in effects:
            val = enc(fn(rows))
            if val.ndim == 1:
                out[:, cols.start] = val
            else:
                out[:, cols] = val
        return out

    def enabled(self, rows: np.ndarray, index: int) -> np.ndarray:
        """Which rows can fire transition `index`."""
        col, loc = self.loc_idx[index]
        at = rows[:, col] == loc
        return at & np.asarray(self.guard_fns[index](rows), dtype=bool)

    def fire(self, rows: np.ndarray, index: int) -> np.ndarray:
        """Successor rows under transition `index` (enabledness not checked)."""
        child = self._apply(rows, self.effects[index])
        child[:, self.loc_idx[index][0]] = self.dst_idx[index]
        return child

    def expand(self, frontier: np.ndarray, base: int):
        """All successors of `frontier` rows as (parent ids, tids, child rows)."""
        parents, tids, children = [], [], []
        loc_masks: Dict[Tuple[int, int], np.ndarray] = {}
        for t in self.transitions:
            key = self.loc_idx[t.index]
            m = loc_masks.get(key)
            if m is None:
                m = np.flatnonzero(frontier[:, key[0]] == key[1])
                loc_masks[key] = m
            if m.size == 0:
                continue
            rows = frontier[m]
            g = np.asarray(self.guard_fns[t.index](rows), dtype=bool)
            if not g.all():
                rows = rows[g]
                sel = m[g]
            else:
                sel = m
            if sel.size == 0:
                continue
            child = self._apply(rows, self.effects[t.index])
            child[:, key[0]] = self.dst_idx[t.index]
            parents.append(sel + base)
            tids.append(np.full(sel.size, t.index, dtype=np.int64))
            children.append(child)
        if not parents:
            w = frontier.shape[1]
            return (np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros((0, w), np.int64))
        return np.concatenate(parents), np.concatenate(tids), np.concatenate(children)


def _unique_rows(rows: np.ndarray) -> np.ndarray:
    if rows.shape[0] <= 1:
        return rows
    _, first = np.unique(rows, axis=0, return_index=True)
    return rows[np.sort(first)]


class _KeyIndex:
    """Map from packed state keys to ids; vectorized for single-word keys."""

    def __init__(self, nwords: int):
        self.nwords = nwords
        self.sorted_keys = np.zeros(0, dtype=np.int64)
        self.sorted_ids = np.zeros(0, dtype=np.int64)
        self.table: Dict[bytes, int] = {}

    def lookup(self, keys: np.ndarray) -> np.ndarray:
        """Ids for `keys` (rows), -1 where unknown."""
        if self.nwords == 1:
            k = keys[:, 0]
            pos = np.searchsorted(self.sorted_keys, k)
            pos_c = np.minimum(pos, max(len(self.sorted_keys) - 1, 0))
            if len(self.sorted_keys) == 0:
                return np.full(len(k), -1, dtype=np.int64)
            hit = self.sorted_keys[pos_c] == k
            return np.where(hit, self.sorted_ids[pos_c], -1)
        get = self.table.get
        return np.fromiter((get(r.tobytes(), -1) for r in keys), dtype=np.int64,
                           count=keys.shape[0])

    def add(self, keys: np.ndarray, ids: np.ndarray) -> None:
        if self.nwords == 1:
            k = keys[:, 0]
            order = np.argsort(k, kind="stable")
            k, ids = k[order], ids[order]
            pos = np.searchsorted(self.sorted_keys, k)
            self.sorted_keys = np.insert(self.sorted_keys, pos, k)
            self.sorted_ids = np.insert(self.sorted_ids, pos, ids)
            return
        for r, i in zip(keys, ids.tolist()):
            self.table[r.tobytes()] = i


def _first_occurrence(keys: np.ndarray):
    """(unique key rows in first-occurrence order, inverse index)."""
    if keys.shape[1] == 1:
        uniq, first, inv = np.unique(keys[:, 0], return_index=True, return_inverse=True)
    else:
        uniq, first, inv = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inv = inv.reshape(-1)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return first[order], rank[inv]


def concretize(comp: Composition, max_states: int = DEFAULT_MAX_STATES, jobs: int = 1,
               check_deadlock: bool = True) -> Lts:
    """Build the reachable LTS of `comp` under interleaving and frame semantics."""
    layout = Layout(comp)
    ex = Stepper(comp, layout)
    packer = _Packer(layout)
    index = _KeyIndex(packer.nwords)

    init_rows = ex.initial_rows()
    if init_rows.shape[0] > max_states:
        raise StateLimitExceeded(max_states)
    chunks = [init_rows]
    n = init_rows.shape[0]
    index.add(packer.keys(init_rows), np.arange(n, dtype=np.int64))
    parent_l = [np.full(n, -1, dtype=np.int64)]
    pedge_l = [np.full(n, -1, dtype=np.int64)]
    depth_l = [np.zeros(n, dtype=np.int64)]
    src_l, dst_l, tid_l = [], [], []

    frontier, base, level = init_rows, 0, 0
    pool = ThreadPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        while frontier.shape[0]:
            if pool is not None and frontier.shape[0] >= 2 * jobs:
                bounds = np.linspace(0, frontier.shape[0], jobs + 1).astype(int)
                parts = list(pool.map(lambda ab: ex.expand(frontier[ab[0]:ab[1]], base + ab[0]),
                                      zip(bounds[:-1], bounds[1:])))
                par = np.concatenate([p[0] for p in parts])
                tid = np.concatenate([p[1] for p in parts])
                child = np.concatenate([p[2] for p in parts])
            else:
                par, tid, child = ex.expand(frontier, base)

            if check_deadlock:
                fired = np.zeros(frontier.shape[0], dtype=bool)
                fired[par - base] = True
                if not fired.all():
                    dead = base + int(np.flatnonzero(~fired)[0])
                    _raise_deadlock(layout, chunks, parent_l, pedge_l, ex.transitions, dead)

            # canonical order: parent id, then transition index
            order = np.lexsort((tid, par))
            par, tid, child = par[order], tid[order], child[order]
            keys = packer.keys(child)
            ids = index.lookup(keys)
            new = ids < 0
            if new.any():
                first, rank = _first_occurrence(keys[new])
                start = base + frontier.shape[0]
                new_ids = start + np.arange(first.size, dtype=np.int64)
                if start + first.size > max_states:
                    raise StateLimitExceeded(max_states)
                ids[new] = new_ids[rank]
                newpos = np.flatnonzero(new)[first]
                new_rows = child[newpos]
                index.add(keys[newpos], new_ids)
                chunks.append(new_rows)
                parent_l.append(par[newpos])
                pedge_l.append(tid[newpos])
                depth_l.append(np.full(first.size, level + 1, dtype=np.int64))
            else:
                new_rows = child[:0]
            src_l.append(par)
            dst_l.append(ids)
            tid_l.append(tid)
            base += frontier.shape[0]
            frontier = new_rows
            level += 1
    finally:
        if pool is not None:
            pool.shutdown()

    states = np.concatenate(chunks)
    src = np.concatenate(src_l) if src_l else np.zeros(0, np.int64)
    dst = np.concatenate(dst_l) if dst_l else np.zeros(0, np.int64)
    tid = np.concatenate(tid_l) if tid_l else np.zeros(0, np.int64)
    order = np.lexsort((dst, tid, src))
    return Lts(comp, layout, states, np.arange(init_rows.shape[0], dtype=np.int64),
               src[order], dst[order], tid[order], ex.transitions,
               np.concatenate(parent_l), np.concatenate(pedge_l), np.concatenate(depth_l))


def _raise_deadlock(layout: Layout, chunks, parent_l, pedge_l, transitions, dead: int):
    states = np.concatenate(chunks)
    parent = np.concatenate(parent_l)
    pedge = np.concatenate(pedge_l)
    path = []
    i = dead
    while i >= 0:
        path.append(i)
        i = int(parent[i])
    path.reverse()
    trace = []
    for j, sid in enumerate(path):
        step = {"state": layout.decode(states[sid])}
        if j > 0:
            step["transition"] = transitions[int(pedge[sid])].label
        trace.append(step)
    raise DeadlockError(layout.decode(states[dead]), trace)


def state_declarators(lts: Lts) -> Dict[str, np.ndarray]:
    """Per instance, the index of the occupied declarator in every state."""
    return {alias: lts.states[:, c] for alias, c in lts.layout.loc_cols.items()}
