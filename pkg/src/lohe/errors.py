"""Exception types shared across the package."""


class UsageError(ValueError):
    """Invalid arguments, shapes, or configuration."""


class NumericError(ArithmeticError):
    """Non-finite values or a conservation-law violation during integration."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time
