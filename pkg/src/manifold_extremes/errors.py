"""Exception types raised across the package."""


class InvalidGeometryError(ValueError):
    pass


class RankDeficientError(ValueError):
    pass


class SpacingTooSmallError(ValueError):
    """Raised when a mesh would exceed the configured point cap."""


class DomainError(ValueError):
    pass


class NotPositiveDefiniteError(RuntimeError):
    """Raised when no level of the jitter schedule yields a Cholesky factor."""


class QuadratureError(RuntimeError):
    pass


class ConfigError(ValueError):
    pass
