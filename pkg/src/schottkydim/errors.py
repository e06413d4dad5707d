"""Exception hierarchy shared by every module."""


class SchottkyDimError(Exception):
    """Base class for all library errors."""


class InputError(SchottkyDimError, ValueError):
    """Malformed input: wrong shapes, unknown keys, bad parameter ranges."""


class DomainError(SchottkyDimError, ValueError):
    """An operation was called outside its mathematical domain."""


class ConditioningError(SchottkyDimError, ArithmeticError):
    """Floating-point drift too large to repair (long words, degenerate matrices)."""


class NumericError(SchottkyDimError, ArithmeticError):
    """A numerical routine (eigen-solver, fit) failed."""


class ConstructionError(SchottkyDimError):
    """A Schottky system could not be built within the configured limits."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class EstimationError(SchottkyDimError):
    """A dimension or exponent estimate could not be formed from the data."""
