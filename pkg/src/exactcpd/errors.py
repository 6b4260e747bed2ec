"""Exception types raised across the package."""

from __future__ import annotations


class CPDError(Exception):
    """Base class for all package errors."""


class ZeroInverse(CPDError, ZeroDivisionError):
    pass


class NotInvertible(CPDError, ZeroDivisionError):
    """A border-ring element with zero constant term has no inverse."""


class Singular(CPDError, ValueError):
    pass


class ShapeMismatch(CPDError, ValueError):
    pass


class CertificateMismatch(CPDError, ValueError):
    pass


class UnknownFamily(CPDError, KeyError):
    pass


class BorderRingUnsupported(CPDError, TypeError):
    pass


class InternalInconsistency(CPDError, AssertionError):
    """An invariant that must hold by construction was violated."""


class UnsupportedD(CPDError, ValueError):
    pass


class UnsupportedK(CPDError, ValueError):
    pass


class InvalidShape(CPDError, ValueError):
    pass


class TooLarge(CPDError, RuntimeError):
    pass


class BudgetExceeded(CPDError, RuntimeError):
    pass


class ParseError(CPDError, ValueError):
    """Malformed input file; carries a 1-based line and column when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)
