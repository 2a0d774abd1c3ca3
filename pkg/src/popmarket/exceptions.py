"""Exception types raised by popmarket."""


class PopMarketError(Exception):
    """Base class for all popmarket errors."""


class InvalidInputError(PopMarketError, ValueError):
    """An argument is malformed or out of its allowed range."""


class DegenerateQualityError(PopMarketError, ValueError):
    """Quality-proportional choice is undefined because all qualities are zero."""


class UndefinedCorrelationError(PopMarketError, ValueError):
    """Kendall tau-b has a zero denominator (one input is constant)."""


class NoTraceError(PopMarketError):
    """A trace was requested from results computed without tracing."""


class ConfigError(PopMarketError, ValueError):
    """A sweep configuration could not be loaded or validated.

    ``key`` names the offending configuration key when there is one.
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class SweepError(PopMarketError, RuntimeError):
    """A grid cell failed; ``completed`` counts the cells finished before the abort."""

    def __init__(self, message, completed):
        super().__init__(message)
        self.completed = completed
