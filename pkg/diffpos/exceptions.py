from typing import Any, Optional


class DiffposError(Exception):
    """Base class of every error raised by diffpos."""


class ArgumentError(DiffposError, ValueError):
    """Inconsistent arguments: base points, dimensions or manifolds do not match."""


class DomainError(DiffposError, ValueError):
    """A point or matrix left the chart domain (e.g. lost positive-definiteness)."""


class NumericError(DiffposError, ArithmeticError):
    """A numerical routine did not reach its tolerance."""


class StiffnessError(NumericError):
    """Step-size underflow during integration.

    Args:
        message (str): solver message.
        trajectory (:obj:`diffpos.dynamics.Trajectory`, optional): the part of the
          trajectory integrated before the failure.
    """

    def __init__(self, message: str, trajectory: Optional[Any] = None):
        super().__init__(message)
        self.trajectory = trajectory


class FoliationError(NumericError):
    """The interior-everywhere condition of a foliation could not be satisfied."""


class ConfigError(DiffposError):
    """Malformed configuration, unknown system or unusable output location."""


class SchemaError(ConfigError):
    """A JSON artifact carries an unexpected schema version."""
