"""Exception types shared across the package."""


class SplitStabError(Exception):
    """Base class for errors raised by splitstab."""


class DimensionError(SplitStabError, ValueError):
    """Operands have incompatible shapes."""


class LpStalled(SplitStabError, RuntimeError):
    """The simplex method hit its pivot cap before reaching a status."""


class EmptySetError(SplitStabError, ValueError):
    """A set description has no points."""


class NotInSetError(SplitStabError, ValueError):
    """A point expected to lie in a set does not."""


class ProjectionError(SplitStabError, RuntimeError):
    """Dykstra's algorithm did not converge.

    The last iterate and its residual are kept for inspection.
    """

    def __init__(self, message, iterate, residual):
        super().__init__(message)
        self.iterate = iterate
        self.residual = residual


class NotASolutionError(SplitStabError, ValueError):
    """The reference point of a problem is not one of its solutions."""


class UnsupportedDimension(SplitStabError, ValueError):
    """The brute-force oracle only covers low dimensions."""


class SpecFormatError(SplitStabError, ValueError):
    """A problem file is malformed."""
