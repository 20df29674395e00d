"""Exception hierarchy shared by every module in the package."""


class PropXLError(Exception):
    """Base class for all package errors."""


class ConfigError(PropXLError, ValueError):
    """Malformed or inconsistent configuration."""


class DomainError(PropXLError, ValueError):
    """An argument lies outside the domain of the operation."""


class NumericError(PropXLError, ArithmeticError):
    """A numerical procedure failed to produce a trustworthy value."""


class DivergentMoment(NumericError):
    """The exponential moment E[exp(beta * X)] does not exist for the claim model."""


class DegenerateLoading(NumericError):
    """A non-positive safety loading leaves no interior optimum."""


class NoRootFound(NumericError):
    """A bracketing scan found no sign change and no boundary solution applies."""

    def __init__(self, message, scan=None):
        super().__init__(message)
        self.scan = scan


class NewtonStalled(NumericError):
    """Damped Newton iteration did not reach the residual tolerance."""


class NumericUnderflow(NumericError):
    """Every grid cell of the posterior has zero (log -inf) weight."""
