"""Exception types shared across the package."""


class FPPError(Exception):
    """Base class for all errors raised by fpp."""


class InvalidParameter(FPPError, ValueError):
    pass


class NoSolution(FPPError):
    """No tilt parameter solves the model equation.

    ``min_value`` is the smallest value of ``psi(t) + ln(lambda)`` seen on the
    searched part of the domain.
    """

    def __init__(self, message, min_value=None):
        super().__init__(message)
        self.min_value = min_value


class InvalidModel(FPPError):
    pass


class InvalidWindow(FPPError, ValueError):
    pass


class InvalidFamily(FPPError, ValueError):
    pass


class BudgetExceeded(FPPError):
    """Branch-and-bound search ran out of node budget.

    The partial result is attached but must not be used as a trial outcome.
    """

    def __init__(self, message, partial=None, nodes=0):
        super().__init__(message)
        self.partial = partial
        self.nodes = nodes


class ResourceError(FPPError):
    pass


class SizeError(FPPError, ValueError):
    pass


class ConfigError(FPPError, ValueError):
    pass
