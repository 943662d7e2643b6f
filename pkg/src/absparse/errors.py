"""Exception types shared across the package."""


class AbsparseError(Exception):
    """Base class for package errors."""


class SpecMismatchError(AbsparseError):
    """Operands are bound to different group specs."""


class EnumerationGuardError(AbsparseError):
    """An exhaustive enumeration would exceed the safety guard."""


class FunctionFileError(AbsparseError):
    """Malformed function file; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")
