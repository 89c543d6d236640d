"""Command-line entry point: ``ssiv check|scenario|emit``.

Exit codes depend only on verdicts and diagnostics: 0 when everything holds
(or, for scenarios, matches its expectation), 1 when something does not, and
2 on compile, manifest, IO or exploration errors.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from . import __version__
from .checker import check
from .codegen import emit_dot, emit_nusmv
from .core import DEFAULT_MAX_STATES, build_composition, concretize
from .core.compose import Composition
from .crosscheck import ENV_VAR, find_nusmv, run_nusmv
from .errors import SsivError
from .frontend import compile_files
from .library.scenarios import Scenario, compile_scenario, get_scenario, list_scenarios
from .report import FormulaReport, Report, RunReport

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


class _Fatal(Exception):
    """Aborts a command with exit code 2 after printing a diagnostic."""


def _err(msg: str) -> None:
    print(f"ssiv: error: {msg}", file=sys.stderr)


def _warn(msg: str) -> None:
    print(f"ssiv: warning: {msg}", file=sys.stderr)


def _out_dir(path: str) -> Path:
    d = Path(path)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise _Fatal(f"cannot create output directory {d}: {exc.strerror or exc}") from exc
    return d


def _write(path: Path, text: str, encoding: str = "utf-8") -> None:
    try:
        path.write_text(text, encoding=encoding)
    except OSError as exc:
        raise _Fatal(f"cannot write {path}: {exc.strerror or exc}") from exc


def _trace_text(f: FormulaReport, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(f.trace.to_json(), indent=2, sort_keys=True) + "\n"
    return f.trace.text()


# -- running a composition ---------------------------------------------------


def _run(comp: Composition, inputs: Sequence[str], args, scenario: Optional[str] = None,
         expected: Sequence = (), out: Optional[Path] = None) -> RunReport:
    """Concretize, check every formula and collect a RunReport."""
    t0 = time.perf_counter()
    lts = concretize(comp, max_states=args.max_states, jobs=args.jobs)
    verdicts = check(lts, comp.formulas)
    smv_path = None
    if any(f.kind == "ltl" for f in comp.formulas):
        # LTL is delegated: hand the user a program that checks it
        target = (out or _out_dir(args.out)) / f"{scenario or comp.name.lower()}.smv"
        prog = emit_nusmv(comp, warn=False)
        _write(target, prog.text, "ascii")
        smv_path = str(target)
    want = {e.index: e.holds for e in expected}
    formulas = [FormulaReport.from_verdict(i, v, want.get(i),
                                           smv_path if v.status == "delegated" else None)
                for i, v in enumerate(verdicts)]
    elapsed = round((time.perf_counter() - t0) * 1000.0, 3)
    return RunReport(comp.name, tuple(inputs), scenario, lts.num_states, lts.num_transitions,
                     elapsed, formulas)


def _cross_check(run: RunReport, comp: Composition, exe: Optional[str], out: Path) -> dict:
    if exe is None:
        return {"status": "skipped", "reason": f"NuSMV not found (use --nusmv-path or ${ENV_VAR})"}
    target = out / f"{run.scenario or run.name.lower()}.smv"
    _write(target, emit_nusmv(comp, warn=False).text, "ascii")
    try:
        got = run_nusmv(exe, target)
    except (OSError, RuntimeError) as exc:
        return {"status": "error", "smv": str(target), "reason": str(exc)}
    native = [f.verdict == "holds" if f.verdict != "delegated" else None for f in run.formulas]
    ok = len(got) == len(native) and all(n is None or n == g for n, g in zip(native, got))
    return {"status": "match" if ok else "mismatch", "smv": str(target), "nusmv": got}


def _print_run(run: RunReport, show_traces: bool, fmt: str) -> None:
    head = run.scenario or run.name
    print(f"{head}: {run.states} states, {run.transitions} transitions")
    for f in run.formulas:
        line = f"  [{f.index}] {f.verdict:<9} {f.kind.upper()} {f.text}"
        if f.expected is not None:
            want = "holds" if f.expected else "fails"
            line += f"  (expected {want}: {'match' if f.match else 'MISMATCH'})"
        print(line)
        for text, holds in f.conjuncts:
            print(f"        {'holds' if holds else 'fails':<9} {text}")
        if f.smv:
            print(f"        delegated to {f.smv}")
        if f.trace is not None:
            where = f" -> {f.trace_file}" if f.trace_file else ""
            kind = "lasso" if f.trace.is_lasso else "path"
            print(f"        evidence: {kind} of {len(f.trace)} steps{where}")
            if show_traces:
                for ln in _trace_text(f, fmt).splitlines():
                    print(f"          {ln}")
    if run.cross_check is not None:
        cc = run.cross_check
        print(f"  nusmv cross-check: {cc['status'].upper()}"
              + (f" ({cc['reason']})" if "reason" in cc else ""))


def _emit_report(report: Report, args, show_traces: bool) -> None:
    if args.report == "-":
        sys.stdout.write(report.dumps())
        return
    for run in report.runs:
        _print_run(run, show_traces, args.trace_format)
    if report.command == "scenario":
        matched = sum(r.ok for r in report.runs)
        print(f"{matched}/{len(report.runs)} scenarios match expectations")
    if args.report:
        _write(Path(args.report), report.dumps())


# -- commands ----------------------------------------------------------------


def cmd_check(args) -> Tuple[int, Report]:
    extra = [("ctl", p) for p in args.prop] + [("ltl", p) for p in args.ltl]
    program = compile_files(args.files, extra_formulas=extra)
    comp = build_composition(program)
    run = _run(comp, [str(f) for f in args.files], args)
    code = EXIT_OK if run.ok else EXIT_FAIL
    return code, Report("check", [run], code)


def _scenario_run(s: Scenario, args, out: Path, exe: Optional[str]) -> RunReport:
    comp, expected = compile_scenario(s)
    run = _run(comp, [str(p) for p in s.sources], args, s.id, expected, out)
    for f in run.formulas:
        if f.trace is not None:
            ext = "json" if args.trace_format == "json" else "txt"
            path = out / f"{s.id}.f{f.index}.trace.{ext}"
            _write(path, _trace_text(f, args.trace_format))
            f.trace_file = str(path)
    if args.cross_check:
        run.cross_check = _cross_check(run, comp, exe, out)
    return run


def cmd_scenario(args) -> Tuple[int, Report]:
    if args.list:
        for s in list_scenarios():
            print(f"{s.id:<16} {s.attack:<12} {','.join(s.patterns):<10} {s.title}")
        return EXIT_OK, None
    if args.all == bool(args.id):
        raise _Fatal("give exactly one scenario id, or --all")
    chosen = list_scenarios() if args.all else [get_scenario(args.id)]
    out = _out_dir(args.out)
    exe = find_nusmv(args.nusmv_path) if args.cross_check else None
    runs = [_scenario_run(s, args, out, exe) for s in chosen]
    code = EXIT_OK if all(r.ok for r in runs) else EXIT_FAIL
    return code, Report("scenario", runs, code)


def cmd_emit(args) -> Tuple[int, Report]:
    if bool(args.files) == bool(args.scenario):
        raise _Fatal("give source files or --scenario, not both")
    if args.scenario:
        comp, _ = compile_scenario(get_scenario(args.scenario))
        stem = args.scenario
    else:
        comp = build_composition(compile_files(args.files))
        stem = comp.name.lower()
    out = _out_dir(args.out)
    if args.format == "smv":
        prog = emit_nusmv(comp, warn=False)
        for w in prog.warnings:
            _warn(w)
        target = out / f"{stem}.smv"
        _write(target, prog.text, "ascii")
    else:
        target = out / f"{stem}.dot"
        _write(target, emit_dot(comp), "utf-8")
    print(target)
    return EXIT_OK, None


# -- argument parsing --------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--max-states", type=int, default=DEFAULT_MAX_STATES, metavar="N",
                        help="abort exploration beyond N reachable states")
    common.add_argument("--jobs", type=int, default=1, metavar="N",
                        help="threads used for state-space exploration")
    common.add_argument("--trace-format", choices=("text", "json"), default="text")
    common.add_argument("--report", metavar="FILE",
                        help="write the JSON report to FILE ('-' for stdout)")
    common.add_argument("--out", default=".", metavar="DIR",
                        help="directory for trace files and generated programs")

    p = argparse.ArgumentParser(prog="ssiv", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"ssiv {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", parents=[common], help="compile and model-check .sz files")
    c.add_argument("files", nargs="+")
    c.add_argument("--prop", action="append", default=[], metavar="CTL",
                   help="extra CTL property, checked after the declared ones")
    c.add_argument("--ltl", action="append", default=[], metavar="LTL",
                   help="extra LTL property (delegated to the NuSMV program)")
    c.add_argument("--traces", action="store_true", help="print evidence traces in full")

    s = sub.add_parser("scenario", parents=[common], help="run library scenarios")
    s.add_argument("id", nargs="?")
    s.add_argument("--all", action="store_true")
    s.add_argument("--list", action="store_true", help="list scenario ids and exit")
    s.add_argument("--cross-check", action="store_true",
                   help="also run NuSMV on the emitted program and compare verdicts")
    s.add_argument("--nusmv-path", default=None, help=f"NuSMV executable (default ${ENV_VAR})")

    e = sub.add_parser("emit", help="write a NuSMV or Graphviz program")
    e.add_argument("files", nargs="*")
    e.add_argument("--scenario", metavar="ID")
    e.add_argument("--format", choices=("smv", "dot"), default="smv")
    e.add_argument("--out", default=".", metavar="DIR")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"check": cmd_check, "scenario": cmd_scenario, "emit": cmd_emit}[args.command]
    try:
        code, report = handler(args)
        if report is not None:
            _emit_report(report, args, show_traces=getattr(args, "traces", False))
    except _Fatal as exc:
        _err(str(exc))
        return EXIT_ERROR
    except SsivError as exc:
        _err(str(exc))
        return EXIT_ERROR
    except OSError as exc:
        _err(f"{exc.filename or ''}: {exc.strerror or exc}")
        return EXIT_ERROR
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
