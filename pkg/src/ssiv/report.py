"""Machine-readable run reports.

A report is plain data: it serializes to JSON and back without loss, and
embedded traces can be handed to :func:`ssiv.checker.replay` after
:meth:`FormulaReport.trace` has been rebuilt by :func:`Report.from_json`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

from . import __version__
from .checker.ctl import Verdict
from .checker.traces import Trace

SCHEMA = "ssiv-report/1"


@dataclass
class FormulaReport:
    index: int
    kind: str
    text: str
    verdict: str  # holds | fails | delegated
    conjuncts: Tuple[Tuple[str, bool], ...] = ()
    trace: Optional[Trace] = None
    stats: Dict[str, float] = field(default_factory=dict)
    expected: Optional[bool] = None
    match: Optional[bool] = None
    smv: Optional[str] = None
    trace_file: Optional[str] = None

    @classmethod
    def from_verdict(cls, index: int, v: Verdict, expected: Optional[bool] = None,
                     smv: Optional[str] = None) -> "FormulaReport":
        match = None
        if expected is not None and v.holds is not None:
            match = v.holds == expected
        return cls(index, v.formula.kind, v.text, v.status,
                   tuple((t, bool(h)) for t, h in v.conjuncts), v.evidence, dict(v.stats),
                   expected, match, smv)

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "kind": self.kind,
            "text": self.text,
            "verdict": self.verdict,
            "conjuncts": [{"text": t, "holds": h} for t, h in self.conjuncts],
            "trace": self.trace.to_json() if self.trace is not None else None,
            "stats": dict(self.stats),
            "expected": self.expected,
            "match": self.match,
            "smv": self.smv,
            "trace_file": self.trace_file,
        }

    @classmethod
    def from_json(cls, d: dict) -> "FormulaReport":
        trace = Trace.from_json(d["trace"]) if d.get("trace") is not None else None
        return cls(d["index"], d["kind"], d["text"], d["verdict"],
                   tuple((c["text"], c["holds"]) for c in d.get("conjuncts", ())),
                   trace, dict(d.get("stats", {})), d.get("expected"), d.get("match"),
                   d.get("smv"), d.get("trace_file"))


@dataclass
class RunReport:
    """One compiled model: a `check` invocation or one scenario."""
    name: str
    inputs: Tuple[str, ...]
    scenario: Optional[str] = None
    states: int = 0
    transitions: int = 0
    elapsed_ms: float = 0.0
    formulas: List[FormulaReport] = field(default_factory=list)
    cross_check: Optional[dict] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        """True when nothing failed: every verdict holds, or matches its expectation."""
        if self.error is not None:
            return False
        if self.cross_check is not None and self.cross_check.get("status") == "mismatch":
            return False
        for f in self.formulas:
            if f.match is False:
                return False
            if f.expected is None and f.verdict == "fails":
                return False
        return True

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "inputs": list(self.inputs),
            "scenario": self.scenario,
            "stats": {"states": self.states, "transitions": self.transitions,
                      "elapsed_ms": self.elapsed_ms},
            "formulas": [f.to_json() for f in self.formulas],
            "cross_check": self.cross_check,
            "error": self.error,
        }

    @classmethod
    def from_json(cls, d: dict) -> "RunReport":
        st = d.get("stats", {})
        return cls(d["name"], tuple(d.get("inputs", ())), d.get("scenario"),
                   st.get("states", 0), st.get("transitions", 0), st.get("elapsed_ms", 0.0),
                   [FormulaReport.from_json(f) for f in d.get("formulas", ())],
                   d.get("cross_check"), d.get("error"))


@dataclass
class Report:
    command: str
    runs: List[RunReport] = field(default_factory=list)
    exit_code: int = 0
    version: str = __version__
    schema: str = SCHEMA

    def to_json(self) -> dict:
        return {"schema": self.schema,
                "tool": {"name": "ssiv", "version": self.version},
                "command": self.command,
                "exit_code": self.exit_code,
                "runs": [r.to_json() for r in self.runs]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, d: dict) -> "Report":
        if d.get("schema") != SCHEMA:
            raise ValueError(f"unsupported report schema {d.get('schema')!r}")
        return cls(d["command"], [RunReport.from_json(r) for r in d.get("runs", ())],
                   d.get("exit_code", 0), d.get("tool", {}).get("version", ""), d["schema"])

    @classmethod
    def loads(cls, text: str) -> "Report":
        return cls.from_json(json.loads(text))

    def without_timing(self) -> "Report":
        """Copy with every elapsed-time field zeroed, for determinism comparisons."""
        runs = []
        for r in self.runs:
            fs = [replace(f, stats={k: (0.0 if k == "elapsed_ms" else v)
                                    for k, v in f.stats.items()}) for f in r.formulas]
            runs.append(replace(r, elapsed_ms=0.0, formulas=fs))
        return replace(self, runs=runs)
