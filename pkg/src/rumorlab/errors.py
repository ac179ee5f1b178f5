"""Exception types shared across the package."""

from __future__ import annotations

__all__ = [
    "RumorlabError",
    "InconsistentCounts",
    "DisconnectedTypes",
    "ZeroDegreeType",
    "SizeTooSmall",
    "OddGridDimension",
    "InfeasibleSize",
    "MatchingFailed",
    "TableTooShort",
    "ProportionRoundingImpossible",
    "TooManyVertices",
    "NonExponentialLaw",
    "FixedPointDiverged",
    "TimesOutsideGrid",
    "NotPSDAfterRidge",
    "GridMismatch",
    "ConfigError",
]


class RumorlabError(Exception):
    """Base class for all package-specific errors."""


class InconsistentCounts(RumorlabError):
    """Neighbor-count matrix admits no positive vertex-type proportions."""


class DisconnectedTypes(RumorlabError):
    """The type adjacency structure is not connected."""


class ZeroDegreeType(RumorlabError):
    """Some vertex type has no neighbors at all."""


class SizeTooSmall(RumorlabError):
    """Requested family size is below the smallest valid instance."""


class OddGridDimension(RumorlabError):
    """Decorated grid dimensions must be even."""


class InfeasibleSize(RumorlabError):
    """No vertex-count vector at this total size realizes the blueprint."""


class MatchingFailed(RumorlabError):
    """Half-edge matching could not produce a simple graph within budget."""

    def __init__(self, message, restarts=None):
        super().__init__(message)
        self.restarts = restarts


class TableTooShort(RumorlabError):
    """Growth table does not cover the requested index."""


class ProportionRoundingImpossible(RumorlabError):
    """Rounded per-type initial counts do not fit inside the type."""


class TooManyVertices(RumorlabError):
    """Exact distribution requested on a state space that is too large."""


class NonExponentialLaw(RumorlabError):
    """Exact distribution requires a memoryless (or absent) stifling law."""


class FixedPointDiverged(RumorlabError):
    """Per-step fixed-point iteration failed to reach tolerance."""

    def __init__(self, message, step=None, residual=None):
        super().__init__(message)
        self.step = step
        self.residual = residual


class TimesOutsideGrid(RumorlabError):
    """Requested evaluation times do not lie on the solution grid."""


class NotPSDAfterRidge(RumorlabError):
    """Covariance block stayed indefinite beyond the allowed ridge."""

    def __init__(self, message, min_eigenvalue=None, block=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue
        self.block = block


class GridMismatch(RumorlabError):
    """Arrays defined on different time grids were combined."""


class ConfigError(RumorlabError):
    """Configuration file or flag value is invalid."""

    def __init__(self, message, pointer=None):
        if pointer:
            message = f"{pointer}: {message}"
        super().__init__(message)
        self.pointer = pointer
