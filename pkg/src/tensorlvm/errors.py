"""Exception types shared across the package.

The CLI maps ``ValidationError`` to exit code 2 and ``NumericalError`` to
exit code 3.
"""


class ValidationError(ValueError):
    """Input violates a documented precondition (shape, symmetry, range)."""


class NumericalError(ArithmeticError):
    """An algorithm failed numerically (collision, non-convergence, NaN)."""


class ContaminationWarning(UserWarning):
    """A recovered rank-1 reshaping has a non-negligible second singular value."""
