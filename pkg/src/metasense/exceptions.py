"""Exception types raised across the package."""


class MetasenseError(Exception):
    """Base class for all package errors."""


class DomainError(MetasenseError, ValueError):
    """An input lies outside the domain an operation accepts."""


class NoBDPError(MetasenseError):
    """The transmittance curve has no downward 0 dB crossing after its peak."""


class SingularSystemError(MetasenseError, ArithmeticError):
    """The dynamic stiffness matrix is singular at a requested frequency."""


class IntegrationError(MetasenseError, RuntimeError):
    """Time integration failed; ``time`` holds the time of failure."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class DegenerateClassificationError(MetasenseError, ValueError):
    """Both classification measures are zero, so the metric is undefined."""


class TrainingDivergenceError(MetasenseError, RuntimeError):
    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class NonConvergenceError(MetasenseError, RuntimeError):
    """No inverse-design trial reached the loss threshold.

    The best attempt is kept on ``best`` so callers can still inspect it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
