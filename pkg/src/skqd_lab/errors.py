"""Exception hierarchy shared by all modules."""


class SkqdError(Exception):
    """Base class for every error raised by skqd_lab."""


class InvalidSizeError(SkqdError, ValueError):
    pass


class DimensionError(SkqdError, ValueError):
    pass


class SymmetryError(SkqdError, ValueError):
    """An operator does not conserve Hamming weight but a sector routine needs it to."""


class InvalidSectorError(SkqdError, ValueError):
    pass


class InvalidBasisError(SkqdError, ValueError):
    pass


class BoundDomainError(SkqdError, ValueError):
    pass


class ConfigError(SkqdError, ValueError):
    pass


class ConvergenceError(SkqdError, RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ResourceError(SkqdError, RuntimeError):
    """The requested computation exceeds a configured size cap."""


class EmptySubspaceError(SkqdError, RuntimeError):
    pass


class SweepError(SkqdError, RuntimeError):
    pass


class EmptySectorWarning(UserWarning):
    pass
