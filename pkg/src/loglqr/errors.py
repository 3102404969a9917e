"""Exception hierarchy shared by all loglqr modules."""


class LqrError(Exception):
    """Base class for every error raised by loglqr."""


class DimensionMismatch(LqrError, ValueError):
    pass


class NonConvergence(LqrError, ArithmeticError):
    """An iterative solver did not reach its tolerance within max_iter."""


class SingularInnerMatrix(LqrError, ArithmeticError):
    """R + B^T P B is numerically singular."""


class UnstableController(LqrError, ArithmeticError):
    """The closed loop A + BK is not stable, so its average cost is infinite."""


class InvalidBound(LqrError, ValueError):
    pass


class NumericOverflow(LqrError, ArithmeticError):
    """The state norm exceeded the overflow guard during a rollout."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class HorizonTooShort(LqrError, ValueError):
    pass


class NoPositiveRoot(LqrError, ArithmeticError):
    pass


class InvariantViolation(LqrError, AssertionError):
    """A mathematical invariant failed; indicates a bug rather than bad input."""


class ConfigError(LqrError, ValueError):
    pass


class InsufficientData(LqrError, ValueError):
    pass
