"""Exception hierarchy shared by all singlap modules."""


class SinglapError(Exception):
    """Base class for library errors."""


class ArgumentError(SinglapError, ValueError):
    """Invalid argument (bad grid, too few points, empty sample set...)."""


class DomainError(SinglapError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class EvaluationError(SinglapError, ArithmeticError):
    """A user-supplied callable returned a non-finite value."""


class ModelError(SinglapError, ValueError):
    """An intrinsic distance model violates its invariants."""


class QuadratureError(SinglapError, ArithmeticError):
    """Quadrature failed or did not reach the requested accuracy.

    ``node`` carries the offending ``(r, theta)`` location when a non-finite
    sample was hit and ``estimate`` the best available value.
    """

    def __init__(self, message, node=None, estimate=None):
        super().__init__(message)
        self.node = node
        self.estimate = estimate


class ConditioningError(SinglapError, ArithmeticError):
    """Numerically meaningless input (e.g. zeros mixed with huge values)."""


class SamplingError(SinglapError, RuntimeError):
    """Rejection sampler could not produce samples reliably."""


class TruncationWarning(UserWarning):
    """Truncation exponent outside the range where the tail bound is useful."""
