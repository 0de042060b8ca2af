"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the region where a quantity is defined."""


class BoundUndefined(ArithmeticError):
    """A bound cannot be evaluated (for example a log of a non-positive number).

    Callers usually treat this as a vacuous bound.
    """


class IngestionError(ValueError):
    """Input data could not be parsed or validated."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class KernelError(DomainError):
    """A kernel produced a Gram matrix that is not positive semi-definite."""
