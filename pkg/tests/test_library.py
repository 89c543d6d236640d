"""Model library: scenario manifests, the frozen golden suite, baselines."""
import json
from pathlib import Path

import pytest

from oracles import evaluate
from ssiv import ir
from ssiv.checker import Trace, check, replay
from ssiv.core import concretize
from ssiv.errors import ManifestError, ReplayMismatch, UnknownScenario
from ssiv.library import (MODELS, compile_scenario, conformity_atom, get_scenario,
                          list_scenarios, read_manifest)

GOLDEN = json.loads((Path(__file__).parent / "golden" / "scenarios.json").read_text())
TABLE = [s for s in list_scenarios() if s.id not in ("vm-upload", "vm-upload-mitm")]


def test_inventory():
    ids = [s.id for s in list_scenarios()]
    assert len(ids) == 14 and ids == sorted(ids)
    assert len(TABLE) == 12
    assert {s.attack for s in TABLE} == {"MitM", "Masquerade", "Collusion", "DoS"}
    assert len(list((MODELS / "patterns").glob("*.sz"))) == 8
    assert len(list((MODELS / "attackers").glob("*.sz"))) == 4
    for s in TABLE:
        assert s.attackers and s.patterns


@pytest.mark.parametrize("sid", sorted(GOLDEN))
def test_golden(sid):
    frozen = GOLDEN[sid]
    comp, expected = compile_scenario(get_scenario(sid))
    lts = concretize(comp)
    assert (lts.num_states, lts.num_transitions) == (frozen["states"], frozen["transitions"])
    verdicts = check(lts, comp.formulas)
    assert len(verdicts) == len(frozen["formulas"]) == len(expected)
    for v, f, e in zip(verdicts, frozen["formulas"], expected):
        assert v.text == f["text"]
        assert v.status == f["status"]
        assert v.holds == e.holds
        assert [list(c) for c in v.conjuncts] == f["conjuncts"]
        if v.evidence is None:
            assert f["evidence_steps"] is None
            continue
        assert e.evidence
        assert (len(v.evidence), v.evidence.is_lasso) == (f["evidence_steps"], f["lasso"])
        assert replay(v.evidence, comp)


@pytest.mark.parametrize("s", TABLE, ids=lambda s: s.id)
def test_table_rows_violate_their_property(s):
    comp, expected = compile_scenario(s)
    verdicts = check(concretize(comp), comp.formulas)
    assert verdicts[0].status == "fails"
    # completion and sanity parts hold
    assert all(v.status == "holds" for v in verdicts[1:])
    for text, holds in verdicts[0].conjuncts:
        if not text.startswith("AG"):
            assert holds, text


@pytest.mark.parametrize("s", [s for s in list_scenarios() if s.attackers], ids=lambda s: s.id)
def test_baseline_without_attacker_holds(s):
    comp, _ = compile_scenario(s, inert=s.attackers)
    verdicts = check(concretize(comp, check_deadlock=False), comp.formulas)
    assert [v.status for v in verdicts] == ["holds"] * len(verdicts)


def test_unknown_scenario():
    with pytest.raises(UnknownScenario):
        get_scenario("nope")


def _manifest(tmp_path, body, name="x"):
    d = tmp_path / name
    d.mkdir()
    (d / "scenario.toml").write_text(body)
    return d / "scenario.toml"


GOOD = '''
id = "tmp"
sources = ["example1/environment.sz", "example1/holder.sz", "example1/vendor.sz",
           "example1/main.sz"]
[[formula]]
text = "AF (h.isDone and v.isDone)"
holds = true
'''


def test_manifest_ok(tmp_path):
    s = read_manifest(_manifest(tmp_path, GOOD))
    assert s.id == "tmp" and s.attack == "none" and s.expected[0].holds
    assert not s.expected[0].evidence
    assert "tmp" in [x.id for x in list_scenarios([tmp_path])]


@pytest.mark.parametrize("edit", [
    lambda t: t.replace('id = "tmp"', ""),
    lambda t: t.replace("holds = true", ""),
    lambda t: 'attack = "phishing"\n' + t,
    lambda t: t.replace("example1/main.sz", "example1/nothing.sz"),
    lambda t: t.replace("[[formula]]", "[[formula]]\nkind = \"pltl\""),
    lambda t: t + "= broken",
])
def test_manifest_errors(tmp_path, edit):
    with pytest.raises(ManifestError):
        read_manifest(_manifest(tmp_path, edit(GOOD)))


def test_manifest_formula_must_match_control(tmp_path):
    path = _manifest(tmp_path, GOOD.replace("isDone and", "isDone or"))
    with pytest.raises(ManifestError):
        compile_scenario(read_manifest(path))


def test_duplicate_ids(tmp_path):
    _manifest(tmp_path, GOOD.replace('"tmp"', '"vm-upload"'))
    with pytest.raises(ManifestError):
        list_scenarios([tmp_path])


def test_conformity_atom():
    vc = ir.Var("vc", ir.SET)
    atom = conformity_atom(ir.Const("A", ir.STRING), vc)
    assert evaluate(atom, {"vc": frozenset()}, ("NONE", "A"))
    assert evaluate(atom, {"vc": frozenset({"A"})}, ("NONE", "A"))
    assert not evaluate(atom, {"vc": frozenset({"B"})}, ("NONE", "A", "B"))
    slot = conformity_atom(ir.Const("A", ir.STRING), ir.Var("s", ir.STRING))
    assert evaluate(slot, {"s": "NONE"}, ())
    assert not evaluate(slot, {"s": "B"}, ())


@pytest.mark.parametrize("sid", ["masq-sk-cd", "dos-dt", "vm-upload-mitm"])
def test_trace_json_roundtrip(sid):
    comp, _ = compile_scenario(get_scenario(sid))
    v = next(v for v in check(concretize(comp), comp.formulas) if v.evidence is not None)
    again = Trace.from_json(json.loads(json.dumps(v.evidence.to_json())))
    assert again == v.evidence
    assert replay(again, comp)


def test_tampered_trace_is_rejected():
    comp, _ = compile_scenario(get_scenario("vm-upload-mitm"))
    trace = check(concretize(comp), comp.formulas)[1].evidence
    data = trace.to_json()
    data["prefix"][3]["state"]["m.vc"] = "VC_H"
    with pytest.raises(ReplayMismatch):
        replay(Trace.from_json(data), comp)
