"""Exception types shared across the package."""


class NotPositiveDefinite(ValueError):
    """A Cholesky pivot was not strictly positive."""


class NoConvergence(RuntimeError):
    """An iterative solver exhausted its iteration budget."""


class DomainError(ValueError):
    """An argument lies outside the domain of a physical model."""


class DegenerateChannel(ValueError):
    """The channel carries no power, so the problem has no meaningful optimum."""


class ConstraintViolated(ValueError):
    """The relay power constraint does not hold with equality at the given point."""


class ConfigError(Exception):
    """Base class for configuration problems."""


class ParseError(ConfigError):
    """The configuration file is not well-formed."""


class ValidationError(ConfigError):
    """A configuration value is out of range.

    Parameters
    ----------
    field : str
        Dotted name of the offending key.
    message : str
        Human-readable reason.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
