"""Exception types raised by the package."""


class InvalidInputError(ValueError):
    """Raised when arguments violate a documented precondition."""


class IngestionError(InvalidInputError):
    """Raised when raw data cannot be turned into curves."""
