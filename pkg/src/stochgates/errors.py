"""Exception types raised across the package."""


class StgError(Exception):
    """Base class for package errors."""


class DomainError(StgError, ValueError):
    pass


class ShapeError(StgError, ValueError):
    pass


class UsageError(StgError, RuntimeError):
    pass


class DegenerateInputError(StgError, ValueError):
    pass


class DivergenceError(StgError, RuntimeError):
    def __init__(self, epoch, value=None):
        self.epoch = epoch
        self.value = value
        super().__init__(f"non-finite training loss at epoch {epoch} (value={value})")


class SchemaError(StgError, ValueError):
    pass


class ConfigError(StgError, ValueError):
    pass
