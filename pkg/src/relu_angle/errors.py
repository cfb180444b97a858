"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the domain where a formula is defined."""


class AccuracyNotReached(RuntimeError):
    """Quadrature could not meet the requested tolerance within its node budget."""

    def __init__(self, message, bound):
        super().__init__(message)
        self.bound = bound


class BudgetExceeded(RuntimeError):
    """An enumeration would exceed the allowed work budget."""

    def __init__(self, message, required):
        super().__init__(message)
        self.required = required


class ConsistencyError(ArithmeticError):
    """An exact computation produced a value that violates a known invariant."""


class SchemaError(ValueError):
    """Input file columns do not match the expected layout."""
