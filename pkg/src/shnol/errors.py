"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`ShnolError`.
The CLI maps :class:`ConfigError` to exit code 2 and everything else to 1.
"""


class ShnolError(Exception):
    """Base class for package errors."""


class InvalidRange(ShnolError, ValueError):
    pass


class InvalidParameter(ShnolError, ValueError):
    pass


class GridMismatch(ShnolError, ValueError):
    pass


class EmptyWindow(ShnolError, ValueError):
    pass


class UnderResolved(ShnolError, ValueError):
    """A window holds fewer nodes than the resolution floor."""


class NegativeRadicand(ShnolError, ArithmeticError):
    """Q(v,v) + (1+c)||v||^2 < 0: the semibound constant is wrong."""


class NonPositive(ShnolError, ValueError):
    pass


class NotPositiveDefinite(ShnolError, ArithmeticError):
    pass


class ShootingOverflow(ShnolError, OverflowError):
    pass


class CriticalOperator(ShnolError):
    """The two minimal solutions are proportional: no Green function exists."""


class DivergenceTooSlow(ShnolError):
    pass


class OutOfRange(ShnolError, ValueError):
    pass


class RangeExhausted(ShnolError):
    def __init__(self, message, feasible=0):
        super().__init__(message)
        self.feasible = feasible


class ScheduleViolation(ShnolError, ValueError):
    """``condition``/``index``: the first failure; ``violations``: every (condition, first index)."""

    def __init__(self, message, condition, index, violations=None):
        super().__init__(message)
        self.condition = condition
        self.index = index
        self.violations = list(violations) if violations is not None else [(condition, index)]


class SupportViolation(ShnolError, ValueError):
    pass


class IdentityViolation(ShnolError, ArithmeticError):
    pass


class TooShort(ShnolError, ValueError):
    pass


class ConfigError(ShnolError):
    """Configuration problems, collected so that all are reported at once."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
