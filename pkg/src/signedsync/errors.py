"""Exception types shared across the package.

The CLI maps these onto exit codes: validation problems exit 1, numeric
trouble exits 2.
"""


class ValidationError(ValueError):
    """Bad argument, config value or graph definition."""


class RangeError(ValidationError):
    """A requested window or index lies outside the recorded data."""


class FormatError(ValidationError):
    """An input file does not follow the expected schema."""


class NumericError(ArithmeticError):
    """A non-finite value appeared while integrating."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class DivergenceError(NumericError):
    """State magnitude exceeded the overflow bound."""
