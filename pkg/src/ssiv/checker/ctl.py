"""CTL model checking by satisfaction-set labelling.

Formulas are rewritten into the base operators EX, EU and EG plus negation
and conjunction:

    AX p      = !EX !p
    EF p      = E [true U p]
    AF p      = !EG !p
    AG p      = !E [true U !p]
    A [p U q] = !(E [!q U (!p & !q)] | EG !q)
    p | q     = !(!p & !q)
    p -> q    = !(p & !q)
    p <-> q   = (p -> q) & (q -> p)

State formulas without temporal operators are evaluated directly over the
state matrix.  Satisfaction sets are boolean vectors indexed by state id.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .. import ir
from ..errors import AtomResolutionError, DomainError, UnsupportedOperator
from ..frontend.resolve import CheckedFormula
from ..ir import Expr, Op, Temporal
from ..core.lts import Lts

TRUE = ir.TRUE
BOOL = ir.BOOL


def _not(e: Expr) -> Expr:
    return Op("not", (e,), BOOL)


def _and(a: Expr, b: Expr) -> Expr:
    return Op("and", (a, b), BOOL)


def _or(a: Expr, b: Expr) -> Expr:
    return _not(_and(_not(a), _not(b)))


def _eu(a: Expr, b: Expr) -> Expr:
    return Temporal("EU", (a, b))


def rewrite(f: Expr) -> Expr:
    """Rewrite `f` into the {EX, EU, EG, not, and} base (state formulas kept whole)."""
    if not ir.is_temporal(f):
        return f
    if isinstance(f, ir.PropRef):
        return rewrite(f.body)
    if isinstance(f, Temporal):
        args = [rewrite(a) for a in f.args]
        op = f.op
        if op in ("X", "F", "G", "U"):
            raise UnsupportedOperator(
                f"LTL operator {op} reached the CTL checker; LTL is delegated to NuSMV")
        if op == "EX":
            return Temporal("EX", (args[0],))
        if op == "AX":
            return _not(Temporal("EX", (_not(args[0]),)))
        if op == "EF":
            return _eu(TRUE, args[0])
        if op == "AF":
            return _not(Temporal("EG", (_not(args[0]),)))
        if op == "EG":
            return Temporal("EG", (args[0],))
        if op == "AG":
            return _not(_eu(TRUE, _not(args[0])))
        if op == "EU":
            return _eu(args[0], args[1])
        if op == "AU":
            p, q = args
            return _not(_or(_eu(_not(q), _and(_not(p), _not(q))),
                            Temporal("EG", (_not(q),))))
        raise UnsupportedOperator(f"unknown temporal operator {op}")
    if isinstance(f, Op):
        args = [rewrite(a) for a in f.args]
        if f.op == "not":
            return _not(args[0])
        if f.op == "and":
            return _and(args[0], args[1])
        if f.op == "or":
            return _or(args[0], args[1])
        if f.op == "implies":
            return _not(_and(args[0], _not(args[1])))
        if f.op == "iff":
            a, b = args
            return _and(_not(_and(a, _not(b))), _not(_and(b, _not(a))))
    raise UnsupportedOperator(f"temporal operator below a non-boolean operator in {ir.show(f)}")


# -- fixpoints -------------------------------------------------------------


def _gather(ptr: np.ndarray, vals: np.ndarray, nodes: np.ndarray):
    """Concatenated CSR rows of `nodes` plus the owning node of every entry."""
    starts = ptr[nodes]
    counts = ptr[nodes + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    owner = np.repeat(nodes, counts)
    offsets = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    return vals[np.repeat(starts, counts) + offsets], owner


def pre_exists(lts: Lts, target: np.ndarray) -> np.ndarray:
    """States with at least one successor in `target` (EX)."""
    out = np.zeros(lts.num_states, dtype=bool)
    out[lts.src[target[lts.dst]]] = True
    return out


@dataclass
class FixpointStats:
    eu_iterations: List[int] = field(default_factory=list)
    eg_iterations: List[int] = field(default_factory=list)


def sat_eu(lts: Lts, p: np.ndarray, q: np.ndarray, stats: Optional[FixpointStats] = None,
           trace: Optional[list] = None) -> np.ndarray:
    """Least fixpoint Z = q | (p & EX Z), by backward propagation."""
    ptr, pred, _ = lts.backward
    z = q.copy()
    frontier = np.flatnonzero(z)
    rounds = 0
    while frontier.size:
        rounds += 1
        if trace is not None:
            trace.append(int(z.sum()))
        cand, _ = _gather(ptr, pred, frontier)
        cand = np.unique(cand)
        cand = cand[p[cand] & ~z[cand]]
        z[cand] = True
        frontier = cand
    if stats is not None:
        stats.eu_iterations.append(rounds)
    return z


def sat_eg(lts: Lts, p: np.ndarray, stats: Optional[FixpointStats] = None,
           trace: Optional[list] = None) -> np.ndarray:
    """Greatest fixpoint Z = p & EX Z, by pruning states without a successor in Z."""
    ptr, pred, _ = lts.backward
    z = p.copy()
    inside = z[lts.dst] & z[lts.src]
    count = np.bincount(lts.src[inside], minlength=lts.num_states)
    dead = np.flatnonzero(z & (count == 0))
    rounds = 0
    while dead.size:
        rounds += 1
        if trace is not None:
            trace.append(int(z.sum()))
        z[dead] = False
        preds, _ = _gather(ptr, pred, dead)
        preds = preds[z[preds]]
        if preds.size == 0:
            break
        np.subtract.at(count, preds, 1)
        cand = np.unique(preds)
        dead = cand[count[cand] == 0]
    if stats is not None:
        stats.eg_iterations.append(rounds)
    return z


class CtlChecker:
    """Satisfaction-set computation with memoization over one LTS."""

    def __init__(self, lts: Lts, debug: bool = False):
        self.lts = lts
        self.debug = debug
        self.stats = FixpointStats()
        self.cache: Dict[Expr, np.ndarray] = lts._ctl_cache

    def atom(self, e: Expr) -> np.ndarray:
        try:
            return self.lts.eval(e)
        except (DomainError, KeyError, ValueError) as exc:
            raise AtomResolutionError(f"cannot resolve `{ir.show(e)}`: {exc}") from exc

    def sat(self, f: Expr) -> np.ndarray:
        """Satisfaction set of an arbitrary (unrewritten) CTL formula."""
        hit = self.cache.get(f)
        if hit is not None:
            return hit
        out = self._base(rewrite(f))
        if self.debug and isinstance(f, Temporal):
            self._check_duality(f, out)
        out.setflags(write=False)
        self.cache[f] = out
        return out

    def _base(self, f: Expr) -> np.ndarray:
        hit = self.cache.get(f)
        if hit is not None:
            return hit
        if not ir.is_temporal(f):
            out = self.atom(f)
        elif isinstance(f, Op) and f.op == "not":
            out = ~self._base(f.args[0])
        elif isinstance(f, Op) and f.op == "and":
            out = self._base(f.args[0]) & self._base(f.args[1])
        elif isinstance(f, Temporal) and f.op == "EX":
            out = pre_exists(self.lts, self._base(f.args[0]))
        elif isinstance(f, Temporal) and f.op == "EU":
            out = sat_eu(self.lts, self._base(f.args[0]), self._base(f.args[1]), self.stats)
        elif isinstance(f, Temporal) and f.op == "EG":
            out = sat_eg(self.lts, self._base(f.args[0]), self.stats)
        else:
            raise UnsupportedOperator(f"not in base form: {ir.show(f)}")
        out = np.asarray(out, dtype=bool)
        out.setflags(write=False)
        self.cache[f] = out
        return out

    def _check_duality(self, f: Temporal, out: np.ndarray) -> None:
        p = f.args[0]
        if f.op == "AG":
            other = ~self.sat(Temporal("EF", (_not(p),)))
        elif f.op == "AF":
            other = ~self.sat(Temporal("EG", (_not(p),)))
        else:
            return
        if not np.array_equal(out, other):
            raise AssertionError(f"duality violated for {ir.show(f)}")


def sat_set(lts: Lts, f: Expr, debug: bool = False) -> np.ndarray:
    """Boolean vector of the states satisfying CTL formula `f`."""
    return CtlChecker(lts, debug).sat(f)


# -- verdicts ----------------------------------------------------------------


def top_conjuncts(f: Expr) -> List[Expr]:
    while isinstance(f, ir.PropRef):
        f = f.body
    if isinstance(f, Op) and f.op == "and" and ir.is_temporal(f):
        return top_conjuncts(f.args[0]) + top_conjuncts(f.args[1])
    return [f]


@dataclass
class Verdict:
    formula: CheckedFormula
    status: str  # holds | fails | delegated
    evidence: Optional["Trace"] = None
    conjuncts: List[Tuple[str, bool]] = field(default_factory=list)
    stats: Dict[str, float] = field(default_factory=dict)

    @property
    def holds(self) -> Optional[bool]:
        if self.status == "delegated":
            return None
        return self.status == "holds"

    @property
    def text(self) -> str:
        return self.formula.text


def check_formula(lts: Lts, formula: CheckedFormula, debug: bool = False,
                  evidence: bool = True) -> Verdict:
    from .traces import counterexample

    t0 = time.perf_counter()
    if formula.kind == "ltl":
        return Verdict(formula, "delegated",
                       stats={"states": lts.num_states, "transitions": lts.num_transitions,
                              "elapsed_ms": 0.0})
    checker = CtlChecker(lts, debug)
    sat = checker.sat(formula.expr)
    init = lts.initial
    bad = init[~sat[init]]
    holds = bad.size == 0
    parts = top_conjuncts(formula.expr)
    conjuncts = []
    if len(parts) > 1:
        for part in parts:
            s = checker.sat(part)
            conjuncts.append((ir.show(part), bool(s[init].all())))
    trace = None
    if not holds and evidence:
        trace = counterexample(lts, formula.expr, int(bad.min()), checker)
    elapsed = (time.perf_counter() - t0) * 1000.0
    return Verdict(formula, "holds" if holds else "fails", trace, conjuncts,
                   {"states": lts.num_states, "transitions": lts.num_transitions,
                    "elapsed_ms": round(elapsed, 3)})


def check(lts: Lts, formulas: Sequence[CheckedFormula], debug: bool = False) -> List[Verdict]:
    """One verdict per formula, in order."""
    return [check_formula(lts, f, debug) for f in formulas]
