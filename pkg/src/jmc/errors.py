"""Exception hierarchy shared by every jmc module."""


class JMCError(Exception):
    """Base class for all errors raised by jmc."""


class ParseError(JMCError, ValueError):
    """Malformed expression text; ``position`` is a 0-based character offset."""

    def __init__(self, message: str, position: int, source: str = ""):
        self.position = position
        self.source = source
        super().__init__(f"{message} at position {position}")


class DomainError(JMCError, ArithmeticError):
    """An operation was applied outside its natural domain."""


class DimensionError(JMCError, ValueError):
    """Argument dimensions do not match the declared ones."""


class ZeroProbabilityError(DomainError):
    """Conditioning on an event of probability zero."""


class ConfigError(JMCError, ValueError):
    """Invalid experiment configuration."""
