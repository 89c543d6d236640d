"""Exception hierarchy and source diagnostics."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence


@dataclass(frozen=True)
class Span:
    file: str
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


NO_SPAN = Span("<unknown>", 0, 0)


@dataclass(frozen=True)
class Diagnostic:
    span: Span
    message: str
    severity: str = "error"

    def __str__(self) -> str:
        return f"{self.span}: {self.severity}: {self.message}"


class SsivError(Exception):
    """Base class for every error raised by the toolchain."""


class CompileError(SsivError):
    """A front-end error carrying one or more diagnostics."""

    def __init__(self, message: str, span: Optional[Span] = None,
                 diagnostics: Optional[Sequence[Diagnostic]] = None):
        if diagnostics is None:
            diagnostics = [Diagnostic(span or NO_SPAN, message)]
        self.diagnostics = list(diagnostics)
        self.span = span or self.diagnostics[0].span
        super().__init__("\n".join(str(d) for d in self.diagnostics))

    @property
    def message(self) -> str:
        return self.diagnostics[0].message


class LexError(CompileError):
    pass


class ParseError(CompileError):
    def __init__(self, message: str, span: Optional[Span] = None,
                 expected: Iterable[str] = (),
                 diagnostics: Optional[Sequence[Diagnostic]] = None):
        self.expected = tuple(sorted(set(expected)))
        super().__init__(message, span, diagnostics)


class MixedLogicError(ParseError):
    pass


class UnboundNameError(CompileError):
    pass


class DomainTypeError(CompileError):
    pass


class UniquenessError(CompileError):
    pass


class InitError(CompileError):
    pass


class NoControlSystemError(CompileError):
    pass


# graph_core

class ArityError(SsivError):
    pass


class DomainError(SsivError):
    pass


class AliasClash(SsivError):
    pass


class EnvMismatch(SsivError):
    pass


class PropClash(CompileError):
    """An instance prop shares its name with one of the instance's declarators."""


class StateLimitExceeded(SsivError):
    def __init__(self, limit: int):
        self.limit = limit
        super().__init__(f"reachable state space exceeds the limit of {limit} states "
                         f"(raise it with --max-states)")


class DeadlockError(SsivError):
    def __init__(self, state: dict, trace: list):
        self.state = state
        self.trace = trace
        shown = ", ".join(f"{k}={v}" for k, v in state.items())
        super().__init__(
            f"reachable deadlock after {len(trace) - 1} steps in state [{shown}]; "
            f"add a self-loop such as `DONE -> DONE` to terminal declarators")


# checker

class UnsupportedOperator(SsivError):
    pass


class AtomResolutionError(SsivError):
    pass


class CounterexampleError(SsivError):
    """Raised when evidence is requested for a formula that does not fail."""


class ReplayMismatch(SsivError):
    def __init__(self, index: int, expected, actual):
        self.index = index
        self.expected = expected
        self.actual = actual
        super().__init__(f"trace step {index} does not replay: expected {expected}, got {actual}")


# codegen / library

class EmitError(SsivError):
    pass


class UnknownScenario(SsivError):
    pass


class ManifestError(SsivError):
    """A scenario manifest is malformed or disagrees with its sources."""
