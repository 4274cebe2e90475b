"""Exception hierarchy shared by all modules."""


class ConeMeanderError(Exception):
    """Base class for every error raised by this package."""


class DomainError(ConeMeanderError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConvergenceError(ConeMeanderError, ArithmeticError):
    """A series or iterative procedure did not converge."""


class NumericError(ConeMeanderError, ArithmeticError):
    """A numerical procedure failed (bracketing, quadrature)."""


class ConfigError(ConeMeanderError, ValueError):
    """Invalid configuration, or an unsupported combination of options."""


class SamplingError(ConeMeanderError, RuntimeError):
    """A sampler could not produce the requested paths."""


class RejectionExhausted(SamplingError):
    """No (or too few) acceptances within the attempt budget.

    The partial :class:`~cone_meander.sampler.RejectionReport` is attached
    as ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
