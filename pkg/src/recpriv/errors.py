"""Exception types shared across the toolkit."""


class ConfigError(ValueError):
    """Malformed problem instance: bad axis names, sizes, or pmf rows."""


class DomainError(ValueError):
    """Numeric argument outside the domain of a closed-form function."""


class SizingError(RuntimeError):
    """A requested computation exceeds a configured memory or enumeration cap."""

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required
