"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class BarrierError(Exception):
    """Base class for all errors raised by pwcbarrier."""


class DimensionMismatch(BarrierError, ValueError):
    pass


class InvertedBounds(BarrierError, ValueError):
    pass


class NonPositiveEpsilon(BarrierError, ValueError):
    pass


class InitialOutsideSpace(BarrierError, ValueError):
    pass


class InitialUnsafeOverlap(BarrierError, ValueError):
    pass


class IndexOutOfRange(BarrierError, IndexError):
    pass


class InvertedInterval(BarrierError, ValueError):
    pass


class NonPositiveSigma(BarrierError, ValueError):
    pass


class InfeasibleRow(BarrierError, ValueError):
    """An interval row whose ambiguity set is empty."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class InconsistentBounds(BarrierError, ValueError):
    """A PWA region whose lower map exceeds its upper map at some vertex."""

    def __init__(self, message: str, region: int):
        super().__init__(message)
        self.region = region


class DimensionTooLarge(BarrierError, ValueError):
    pass


class LengthMismatch(BarrierError, ValueError):
    pass


class NegativeBarrierValue(BarrierError, ValueError):
    pass


class NegativeInput(BarrierError, ValueError):
    pass


class LpInfeasible(BarrierError, RuntimeError):
    pass


class LpSolverFailure(BarrierError, RuntimeError):
    pass


class ParseError(BarrierError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class SchemaViolation(BarrierError, ValueError):
    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class VersionMismatch(BarrierError, ValueError):
    pass


class ChecksumMismatch(BarrierError, ValueError):
    pass


class PhaseError(BarrierError):
    """Wraps a failure with the pipeline phase it occurred in."""

    def __init__(self, phase: str, cause: Exception):
        super().__init__(f"[{phase}] {type(cause).__name__}: {cause}")
        self.phase = phase
        self.cause = cause
