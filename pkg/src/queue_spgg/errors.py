"""Exception types raised by the simulation engine."""


class SpggError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(SpggError, ValueError):
    """A model or generator parameter is outside its valid range."""


class InvalidInputError(SpggError, ValueError):
    """Inputs are individually valid but inconsistent with each other."""


class ConsistencyError(SpggError, RuntimeError):
    """Internal data required by a computation is missing or malformed."""


class NoNeighborError(SpggError, ValueError):
    """A node without neighbors was asked to pick a model neighbor."""


class ConfigError(SpggError, ValueError):
    """A configuration file or override failed to parse or validate."""

    def __init__(self, message, *, field=None, line=None, path=None):
        self.message = message
        self.field = field
        self.line = line
        self.path = path
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
