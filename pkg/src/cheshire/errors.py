"""Exception types shared across the package."""


class CheshireError(Exception):
    """Base class for all package errors."""


class ValidationError(CheshireError, ValueError):
    """An input violates a documented precondition (bad state, config, ...)."""


class OrthogonalPostselection(CheshireError):
    """Postselection amplitude (or success probability) is numerically zero,
    so the requested postselected quantity is undefined."""


class GridTooSmall(CheshireError):
    """A pointer shift pushes significant wavefunction amplitude off the grid."""


class FlatObjective(CheshireError):
    """The optimization objective is identically zero; no optimum exists."""


class ConsistencyError(CheshireError):
    """An internal numerical consistency check failed (e.g. a probability
    outside [0, 1])."""


class PositivityError(ConsistencyError):
    """A density that must be pointwise non-negative dipped below tolerance,
    signalling inconsistent inputs."""
