"""State-vector layout and vectorized expression evaluation.

A global state is one row of small integers: environment variables first,
then for every instance its location (current declarator) followed by its
local variables.  Booleans are 0/1, integers are offsets from the lower
bound, strings are indices into the interned universe and sets are bitmask
words of ``SET_BITS`` elements each.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .. import ir
from ..errors import DomainError
from ..ir import Const, Expr, Type
from .compose import Composition

SET_BITS = 62


@dataclass(frozen=True)
class Slot:
    name: str
    type: Type
    col: int
    width: int
    size: int  # number of distinct codes per column (0 = full word)

    @property
    def cols(self) -> slice:
        return slice(self.col, self.col + self.width)


class Layout:
    def __init__(self, comp: Composition):
        self.comp = comp
        self.universe = comp.universe
        self.string_index = {s: i for i, s in enumerate(comp.universe)}
        self.set_width = max(1, -(-len(comp.universe) // SET_BITS))
        self.slots: Dict[str, Slot] = {}
        self.loc_cols: Dict[str, int] = {}
        self.loc_names: Dict[str, Tuple[str, ...]] = {}
        col = 0
        for name, t in comp.env_vars.items():
            col = self._add(name, t, col)
        for g in comp.instances:
            self.loc_cols[g.alias] = col
            self.loc_names[g.alias] = tuple(g.declarators)
            col += 1
            for name, t in g.local_vars.items():
                col = self._add(name, t, col)
        self.width = col
        self.has_sets = any(s.type.kind == "set" for s in self.slots.values())
        self.dtype = np.int64
        hashed = np.full(len(self.universe), -1, dtype=np.int64)
        for i, s in enumerate(self.universe):
            hashed[i] = self.string_index.get(ir.hash_value(s), -1)
        self.hash_table = hashed
        self._cache: Dict[Expr, Callable] = {}

    def _add(self, name: str, t: Type, col: int) -> int:
        if t.kind == "set":
            slot = Slot(name, t, col, self.set_width, 0)
        elif t.kind == "bool":
            slot = Slot(name, t, col, 1, 2)
        elif t.kind == "int":
            slot = Slot(name, t, col, 1, t.hi - t.lo + 1)
        else:
            slot = Slot(name, t, col, 1, len(self.universe))
        self.slots[name] = slot
        return col + slot.width

    def column_sizes(self) -> List[int]:
        """Distinct codes per column (0 marks a full bitmask word)."""
        sizes = [0] * self.width
        for s in self.slots.values():
            for c in range(s.col, s.col + s.width):
                sizes[c] = s.size
        for alias, c in self.loc_cols.items():
            sizes[c] = len(self.loc_names[alias])
        return sizes

    # -- value encoding ----------------------------------------------------

    def encode_value(self, slot: Slot, value) -> List[int]:
        kind = slot.type.kind
        if kind == "bool":
            return [int(bool(value))]
        if kind == "int":
            if not slot.type.lo <= value <= slot.type.hi:
                raise DomainError(f"{slot.name}={value} outside {slot.type}")
            return [value - slot.type.lo]
        if kind == "string":
            if value not in self.string_index:
                raise DomainError(f"{slot.name}={value!r} outside the string domain")
            return [self.string_index[value]]
        words = [0] * slot.width
        for item in value:
            if item not in self.string_index:
                raise DomainError(f"{slot.name} element {item!r} outside the string domain")
            i = self.string_index[item]
            words[i // SET_BITS] |= 1 << (i % SET_BITS)
        return words

    def decode_value(self, slot: Slot, codes):
        kind = slot.type.kind
        if kind == "bool":
            return bool(codes[0])
        if kind == "int":
            return int(codes[0]) + slot.type.lo
        if kind == "string":
            return self.universe[int(codes[0])]
        items = []
        for w, word in enumerate(codes):
            word = int(word)
            for b in range(SET_BITS):
                if word >> b & 1:
                    items.append(self.universe[w * SET_BITS + b])
        return frozenset(items)

    def decode(self, row) -> Dict[str, object]:
        """Row of codes -> {alias: declarator, variable: value} in layout order."""
        out: Dict[str, object] = {}
        for name in self.comp.env_vars:
            s = self.slots[name]
            out[name] = self.decode_value(s, row[s.cols])
        for g in self.comp.instances:
            out[g.alias] = self.loc_names[g.alias][int(row[self.loc_cols[g.alias]])]
            for name in g.local_vars:
                s = self.slots[name]
                out[name] = self.decode_value(s, row[s.cols])
        return out

    def encode(self, valuation: Dict[str, object]) -> np.ndarray:
        row = np.zeros(self.width, dtype=self.dtype)
        for name, s in self.slots.items():
            row[s.cols] = self.encode_value(s, valuation[name])
        for alias, c in self.loc_cols.items():
            row[c] = self.loc_names[alias].index(valuation[alias])
        return row

    def default_codes(self, slot: Slot) -> List[int]:
        """First value of the domain: false, lower bound, "NONE", empty set."""
        return [0] * slot.width

    # -- vectorized evaluation ---------------------------------------------

    def compile(self, e: Expr) -> Callable[[np.ndarray], np.ndarray]:
        """Compile `e` to a function over a state matrix.

        The function returns one value per row: booleans as bool arrays,
        integers as their actual values, strings as universe indices and sets
        as (rows x words) bitmask matrices.
        """
        fn = self._cache.get(e)
        if fn is None:
            fn = self._compile(e)
            self._cache[e] = fn
        return fn

    def _const(self, c: Const):
        kind = c.type.kind
        if kind == "set":
            words = np.zeros(self.set_width, dtype=np.int64)
            for item in c.value:
                if item not in self.string_index:
                    raise DomainError(f"set element {item!r} outside the string domain")
                i = self.string_index[item]
                words[i // SET_BITS] |= np.int64(1) << np.int64(i % SET_BITS)
            return lambda M: np.broadcast_to(words, (M.shape[0], self.set_width))
        if kind == "string":
            v = self.string_index.get(c.value, -1)
        elif kind == "bool":
            v = bool(c.value)
        else:
            v = int(c.value)
        dtype = bool if kind == "bool" else np.int64
        return lambda M: np.full(M.shape[0], v, dtype=dtype)

    def _compile(self, e: Expr):
        if isinstance(e, Const):
            return self._const(e)
        if isinstance(e, ir.Var):
            if e.name not in self.slots:
                raise DomainError(f"unknown variable {e.name}")
            s = self.slots[e.name]
            kind = s.type.kind
            c = s.col
            if kind == "bool":
                return lambda M: M[:, c] != 0
            if kind == "int":
                lo = s.type.lo
                return lambda M: M[:, c] + lo
            if kind == "string":
                return lambda M: M[:, c]
            cols = s.cols
            return lambda M: M[:, cols]
        if isinstance(e, ir.At):
            c = self.loc_cols[e.alias]
            idx = self.loc_names[e.alias].index(e.declarator)
            return lambda M: M[:, c] == idx
        if isinstance(e, ir.PropRef):
            return self.compile(e.body)
        if isinstance(e, ir.Param):
            raise DomainError(f"system argument {e.name} is not bound")
        if isinstance(e, ir.Temporal):
            raise DomainError(f"temporal operator {e.op} cannot be evaluated on a state")
        args = [self.compile(a) for a in e.args]
        op = e.op
        if op == "not":
            a, = args
            return lambda M: ~a(M)
        if op in ("and", "or", "implies", "iff"):
            a, b = args
            if op == "and":
                return lambda M: a(M) & b(M)
            if op == "or":
                return lambda M: a(M) | b(M)
            if op == "implies":
                return lambda M: ~a(M) | b(M)
            return lambda M: a(M) == b(M)
        if op in ("eq", "ne"):
            a, b = args
            if e.args[0].type.kind == "set":
                if op == "eq":
                    return lambda M: np.all(a(M) == b(M), axis=1)
                return lambda M: np.any(a(M) != b(M), axis=1)
            if op == "eq":
                return lambda M: a(M) == b(M)
            return lambda M: a(M) != b(M)
        if op in ("lt", "le", "gt", "ge"):
            a, b = args
            f = {"lt": np.less, "le": np.less_equal, "gt": np.greater, "ge": np.greater_equal}[op]
            return lambda M: f(a(M), b(M))
        if op == "in":
            a, b = args
            return lambda M: self._member(a(M), b(M))
        if op == "hash":
            a, = args
            table = self.hash_table
            return lambda M: table[a(M)]
        if op == "setlit":
            return lambda M: self._set_of([f(M) for f in args], M.shape[0])
        if op in ("add", "sub"):
            a, b = args
            if e.type.kind == "int":
                return (lambda M: a(M) + b(M)) if op == "add" else (lambda M: a(M) - b(M))
            if e.args[1].type.kind == "string":
                if op == "add":
                    return lambda M: a(M) | self._set_of([b(M)], M.shape[0])
                return lambda M: a(M) & ~self._set_of([b(M)], M.shape[0])
            if op == "add":
                return lambda M: a(M) | b(M)
            return lambda M: a(M) & ~b(M)
        raise DomainError(f"cannot evaluate operator {op}")

    def _member(self, elem: np.ndarray, words: np.ndarray) -> np.ndarray:
        elem = np.asarray(elem)
        valid = elem >= 0
        e = np.where(valid, elem, 0)
        w = words[np.arange(words.shape[0]), e // SET_BITS]
        return valid & ((w >> (e % SET_BITS)) & 1).astype(bool)

    def _set_of(self, elems, n: int) -> np.ndarray:
        out = np.zeros((n, self.set_width), dtype=np.int64)
        rows = np.arange(n)
        for el in elems:
            el = np.asarray(el)
            valid = el >= 0
            e = np.where(valid, el, 0)
            bits = np.where(valid, np.left_shift(np.int64(1), e % SET_BITS), 0)
            out[rows, e // SET_BITS] |= bits
        return out

    def encoder(self, name: str) -> Callable[[np.ndarray], np.ndarray]:
        """Map evaluated values of variable `name` back to column codes."""
        s = self.slots[name]
        kind = s.type.kind
        if kind == "bool":
            return lambda v: np.asarray(v).astype(np.int64)
        if kind == "int":
            lo, size = s.type.lo, s.size

            def enc_int(v):
                code = np.asarray(v, dtype=np.int64) - lo
                if code.size and (code.min() < 0 or code.max() >= size):
                    bad = int(code[(code < 0) | (code >= size)][0]) + lo
                    raise DomainError(f"write {s.name}={bad} outside {s.type}")
                return code
            return enc_int
        if kind == "string":
            def enc_str(v):
                v = np.asarray(v, dtype=np.int64)
                if v.size and v.min() < 0:
                    raise DomainError(f"write to {s.name} produces a string outside the domain")
                return v
            return enc_str
        return lambda v: np.asarray(v, dtype=np.int64)
