"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """An argument violates a documented precondition."""


class NumericalError(ArithmeticError):
    """A computation produced non-finite values or a factorisation failed."""
