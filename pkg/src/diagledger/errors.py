"""Exception hierarchy shared across the engine."""


class DiagError(Exception):
    """Base class for every error raised by diagledger."""


class UnitError(DiagError):
    pass


class DomainError(DiagError, ValueError):
    pass


class DivisionByZeroBase(DomainError):
    pass


class PeriodError(DiagError, ValueError):
    pass


class EmptyDenominator(DomainError):
    pass


class MalformedShares(DiagError, ValueError):
    pass


class ClassificationError(DiagError):
    pass


class LineageError(DiagError):
    pass


class UnmappedIndicator(DiagError):
    pass


class SpecError(DiagError):
    pass


class DegenerateVariance(DomainError):
    pass


class IncompleteObservation(DiagError):
    pass


class WeightError(DiagError, ValueError):
    pass


class AlignmentError(DiagError, ValueError):
    pass


class IngestError(DiagError):
    """Raised for malformed dataset rows; carries the 1-based line and column."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class DuplicateIdError(IngestError):
    pass


class DefinitionParseError(DiagError):
    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class IoError(DiagError, OSError):
    pass


class ConfigError(DiagError):
    pass
