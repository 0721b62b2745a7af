"""Exception types shared across the package."""


class ShsbmError(Exception):
    """Base class for every error raised deliberately by this package."""


class InvalidConfigError(ShsbmError, ValueError):
    pass


class InvalidHypothesisError(ShsbmError, ValueError):
    pass


class InvalidSubsetError(ShsbmError, ValueError):
    pass


class ConfigMismatchError(ShsbmError, ValueError):
    pass


class EnumerationGuardError(ShsbmError):
    """The requested search or enumeration exceeds the configured size cap."""


class UnsupportedDivergenceError(ShsbmError):
    pass


class DegenerateSpaceError(ShsbmError):
    pass


class MissingSigmaError(ShsbmError, ValueError):
    pass
