"""Scenario registry: declarative manifests over the built-in `.sz` models.

A scenario lives in its own directory with a ``scenario.toml`` manifest::

    id = "dos-vm"
    title = "Unavailable vendor"
    attack = "DoS"                  # MitM | Collusion | Masquerade | DoS | none
    patterns = ["VM"]
    sources = ["env/network.sz", ..., "scenarios/dos-vm/main.sz"]
    attackers = ["d"]               # instance aliases made inert for the baseline
    description = "..."

    [[formula]]
    kind = "ctl"                    # ctl | ltl
    text = "AG (h.REQ_SENT -> AF h.vcH != ∅)"
    holds = false
    evidence = true                 # a failing verdict must carry a trace

Source paths resolve against the manifest's directory first and the model
library root second.  If the control system declares formulas, the manifest
must list the same formulas in the same order.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..errors import ManifestError, UnknownScenario

MODELS = Path(__file__).resolve().parent / "models"
SCENARIOS = MODELS / "scenarios"

PATTERNS = ("SK", "MK", "SM", "VM", "DT", "IT", "CD", "DD")
ATTACKS = ("MitM", "Collusion", "Masquerade", "DoS", "none")


@dataclass(frozen=True)
class Expected:
    index: int
    holds: bool
    evidence: bool


@dataclass(frozen=True)
class Scenario:
    id: str
    title: str
    attack: str
    patterns: Tuple[str, ...]
    sources: Tuple[Path, ...]
    formulas: Tuple[Tuple[str, str], ...]
    expected: Tuple[Expected, ...]
    attackers: Tuple[str, ...] = ()
    description: str = ""
    manifest: Optional[Path] = field(default=None, compare=False)

    def summary(self) -> dict:
        return {"id": self.id, "title": self.title, "attack": self.attack,
                "patterns": list(self.patterns), "formulas": len(self.formulas)}


def _resolve_source(name: str, base: Path) -> Path:
    for root in (base, MODELS):
        p = root / name
        if p.is_file():
            return p
    raise ManifestError(f"source {name} not found next to the manifest or in the model library")


def read_manifest(path: Union[str, Path]) -> Scenario:
    """Parse and validate one ``scenario.toml``."""
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ManifestError(f"{path}: {exc}") from exc
    for key in ("id", "sources", "formula"):
        if key not in data:
            raise ManifestError(f"{path}: missing `{key}`")
    attack = data.get("attack", "none")
    if attack not in ATTACKS:
        raise ManifestError(f"{path}: unknown attack {attack!r}")
    patterns = tuple(data.get("patterns", ()))
    bad = [p for p in patterns if p not in PATTERNS]
    if bad:
        raise ManifestError(f"{path}: unknown patterns {bad}")
    formulas, expected = [], []
    for i, f in enumerate(data["formula"]):
        kind = f.get("kind", "ctl")
        if kind not in ("ctl", "ltl") or "text" not in f or "holds" not in f:
            raise ManifestError(f"{path}: formula {i} needs kind, text and holds")
        formulas.append((kind, f["text"]))
        expected.append(Expected(i, bool(f["holds"]), bool(f.get("evidence", not f["holds"]))))
    sources = tuple(_resolve_source(s, path.parent) for s in data["sources"])
    return Scenario(data["id"], data.get("title", data["id"]), attack, patterns, sources,
                    tuple(formulas), tuple(expected), tuple(data.get("attackers", ())),
                    data.get("description", ""), path)


def _manifests(extra_dirs: Iterable[Union[str, Path]] = ()) -> List[Path]:
    found = sorted(SCENARIOS.glob("*/scenario.toml"))
    for d in extra_dirs:
        found += sorted(Path(d).glob("*/scenario.toml"))
    return found


def list_scenarios(extra_dirs: Iterable[Union[str, Path]] = ()) -> List[Scenario]:
    """All scenarios sorted by id; ids must be unique."""
    out = {}
    for m in _manifests(extra_dirs):
        s = read_manifest(m)
        if s.id in out:
            raise ManifestError(f"scenario id {s.id} defined twice ({out[s.id].manifest}, {m})")
        out[s.id] = s
    return [out[k] for k in sorted(out)]


def get_scenario(sid: str, extra_dirs: Iterable[Union[str, Path]] = ()) -> Scenario:
    for s in list_scenarios(extra_dirs):
        if s.id == sid:
            return s
    raise UnknownScenario(f"unknown scenario {sid!r}")


def compile_scenario(s: Scenario, inert: Sequence[str] = ()):
    """Compile a scenario to its composition; returns (composition, expected)."""
    from ..core.compose import build_composition
    from ..frontend import compile_files, parse_formula, pretty

    program = compile_files(s.sources)
    if program.control is None:
        raise ManifestError(f"scenario {s.id}: sources contain no main control system")
    declared = [(f.kind, f.text) for f in program.control.formulas]
    if declared:
        wanted = [(k, pretty.expr(parse_formula(t, k))) for k, t in s.formulas]
        if declared != wanted:
            raise ManifestError(f"scenario {s.id}: manifest formulas {wanted} differ from "
                                f"the control system's {declared}")
    else:
        program = compile_files(s.sources, extra_formulas=s.formulas)
    comp = build_composition(program, inert_aliases=inert)
    return comp, s.expected


def load_scenario(sid: str, extra_dirs: Iterable[Union[str, Path]] = ()):
    """(composition, formulas, expected) for a scenario id."""
    s = get_scenario(sid, extra_dirs)
    comp, expected = compile_scenario(s)
    return comp, comp.formulas, expected
