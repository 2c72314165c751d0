"""Exception hierarchy shared by every qassay module."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class SourceSpan:
    """1-based line/column of a construct in QASM source text."""

    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


class QassayError(Exception):
    """Base class for all errors raised by this package."""


class QasmSyntaxError(QassayError):
    def __init__(self, message: str, span: Optional[SourceSpan] = None):
        self.span = span
        where = f" at {span}" if span else ""
        super().__init__(f"{message}{where}")


class UnsupportedConstruct(QasmSyntaxError):
    """A syntactically valid QASM construct outside the supported subset."""

    def __init__(self, construct: str, span: Optional[SourceSpan] = None):
        self.construct = construct
        super().__init__(f"unsupported construct '{construct}'", span)


class IndexOutOfRange(QassayError, IndexError):
    def __init__(self, message: str, span: Optional[SourceSpan] = None):
        self.span = span
        where = f" at {span}" if span else ""
        super().__init__(f"{message}{where}")


class InvalidCircuit(QassayError, ValueError):
    pass


class EmptyCircuit(QassayError, ValueError):
    pass


# simulator
class NonUnitaryCircuit(QassayError):
    pass


class ClbitCollision(QassayError):
    pass


class ZeroNormCollapse(QassayError, ArithmeticError):
    pass


class CapacityExceeded(QassayError):
    pass


# statistics
class DomainError(QassayError, ValueError):
    pass


class InsufficientShots(QassayError, ValueError):
    pass


class TooManyBins(QassayError, ValueError):
    pass


class TooFewQubits(QassayError, ValueError):
    pass


# instrumentation
class OverlapConflict(QassayError):
    pass


class StrategyMismatch(OverlapConflict):
    """Requested strategy cannot implement the assertion kind faithfully."""


# experiments / cli
class InsufficientAssertions(QassayError):
    pass


class UndetectableBug(QassayError):
    pass


class UnknownBuiltin(QassayError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown builtin"


class CatalogError(QassayError, ValueError):
    pass
