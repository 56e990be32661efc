"""Exception hierarchy shared by all modules.

``ValidationError`` covers bad arguments (CLI exit code 2); ``NumericalError``
covers failures of an otherwise valid computation (CLI exit code 1).
"""


class FreeProbError(Exception):
    pass


class ValidationError(FreeProbError, ValueError):
    pass


class NumericalError(FreeProbError, ArithmeticError):
    pass


class ConvergenceError(NumericalError):
    """Fixed-point iteration hit ``max_iter`` before reaching tolerance."""

    def __init__(self, message, z=None, residual=None, iterations=None):
        super().__init__(message)
        self.z = z
        self.residual = residual
        self.iterations = iterations


class MassError(NumericalError):
    """Recovered density does not integrate to the expected mass."""

    def __init__(self, message, mass=None, expected=None):
        super().__init__(message)
        self.mass = mass
        self.expected = expected
