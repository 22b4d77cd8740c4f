"""Exception types shared across the package."""


class CkoptError(Exception):
    """Base class for all package errors."""


class FeasibilityError(CkoptError):
    """An (input, solution) pair violates a problem constraint."""


class DimensionError(CkoptError):
    """Mismatched vector/matrix dimensions."""


class DomainError(CkoptError):
    """An argument is outside its mathematical domain."""


class NoSolutionError(CkoptError):
    """The oracle cannot produce any feasible solution (e.g. disconnected graph)."""


class ParseError(CkoptError):
    """Malformed input file; carries the offending line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class QPConvergenceError(CkoptError):
    """The restricted QP solver did not reach the requested KKT tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ModelLoadError(CkoptError):
    """A persisted model failed validation on load."""
