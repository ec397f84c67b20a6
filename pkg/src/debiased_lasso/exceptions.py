class InputError(ValueError):
    """Malformed or non-finite input data."""


class ScaleError(InputError):
    """Problem size outside what a routine supports."""


class NumericError(ArithmeticError):
    """A numerical routine hit a condition it cannot recover from."""


class DegenerateFitError(NumericError):
    """The scaled LASSO noise estimate collapsed (interpolation regime)."""
