"""Exception hierarchy shared by every fluidctl module."""


class FluidError(Exception):
    """Base class for all library errors."""


class DomainError(FluidError, ValueError):
    """Argument outside the mathematical domain of a function."""


class NoSignChange(FluidError, ValueError):
    """Root bracket endpoints have the same sign."""


class NoConvergence(FluidError, RuntimeError):
    """An iterative method exhausted its iteration budget.

    ``result`` carries the last iterate when the caller may want to inspect it.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class InfeasibleLoad(FluidError, ValueError):
    """The arrival rate cannot be served at any finite water level."""


class NonMonotoneBranch(FluidError, RuntimeError):
    """Parametric queue curve is not increasing on the tabulated branch."""


class OutOfRange(FluidError, ValueError):
    """Evaluation point lies outside a tabulated range."""


class Overdraft(FluidError, ValueError):
    """A controller tried to serve more packets than were queued."""


class StateExplosion(FluidError, ValueError):
    """Discretized state space exceeds the configured bound."""


class ConfigError(FluidError, ValueError):
    """Malformed or invalid configuration file.

    ``line`` is the 1-based line number when the error is tied to one line.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"parse error at line {line}: {message}"
        super().__init__(message)
        self.line = line
