"""Exception hierarchy shared by every psilab module."""


class PsilabError(Exception):
    """Base class for all library errors."""


class ParameterError(PsilabError, ValueError):
    """An argument lies outside the documented parameter domain."""


class RangeError(PsilabError, ValueError):
    """A query point lies outside the range covered by a table."""


class CapacityError(PsilabError, ValueError):
    """A table is too short (or would be too large) for the request."""


class NumericError(PsilabError, ArithmeticError):
    """A quadrature or iterative scheme failed to reach its tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class FormatError(PsilabError, OSError):
    """A data file is malformed."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ZeroFileError(PsilabError, ValueError):
    """A zero-ordinate text file could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MonotonicityError(ZeroFileError):
    """Zero ordinates are not strictly increasing."""

    def __init__(self, message, index):
        super().__init__(f"{message} (entry {index})")
        self.index = index
