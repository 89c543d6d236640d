"""Relabelling effect-free actions as epsilon changes nothing observable."""
import pytest

from ssiv.checker import check
from ssiv.core import build_composition, concretize
from ssiv.frontend import compile_files
from ssiv.library import MODELS, compile_scenario, list_scenarios


def _compositions():
    out = [(s.id, compile_scenario(s)[0]) for s in list_scenarios()]
    for ex in ("example1", "example2"):
        out.append((ex, build_composition(compile_files(sorted((MODELS / ex).glob("*.sz"))))))
    return out


@pytest.mark.parametrize("name,comp", _compositions(), ids=lambda x: x if isinstance(x, str) else "")
def test_elimination_preserves(name, comp):
    elim = comp.eliminated()
    before, after = concretize(comp), concretize(elim)
    assert before.state_set() == after.state_set()
    assert before.transition_set(labels=False) == after.transition_set(labels=False)
    assert [v.status for v in check(before, comp.formulas)] == \
        [v.status for v in check(after, elim.formulas)]
    # something was actually relabelled
    assert any(t.action is None for g in elim.instances for t in g.transitions)


def test_build_with_eliminate_flag():
    files = sorted((MODELS / "example2").glob("*.sz"))
    a = build_composition(compile_files(files), eliminate=True)
    b = build_composition(compile_files(files)).eliminated()
    assert a == b
