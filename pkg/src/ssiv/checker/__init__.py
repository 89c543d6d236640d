"""CTL checking over concretized LTSs, with evidence extraction and replay."""
from .ctl import CtlChecker, Verdict, check, check_formula, rewrite, sat_set
from .traces import Step, Trace, counterexample, replay, shortest_path, witness

__all__ = [
    "CtlChecker", "Step", "Trace", "Verdict", "check", "check_formula", "counterexample",
    "replay", "rewrite", "sat_set", "shortest_path", "witness",
]
