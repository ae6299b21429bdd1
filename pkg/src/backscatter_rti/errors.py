"""Exception types shared across the package."""


class BackscatterRtiError(Exception):
    """Base class for errors raised by this package."""


class GeometryError(BackscatterRtiError, ValueError):
    pass


class ConfigError(BackscatterRtiError, ValueError):
    pass


class LogFormatError(BackscatterRtiError, ValueError):
    pass


class NumericError(BackscatterRtiError, ArithmeticError):
    pass
