"""Exception types shared across the package."""


class DataError(Exception):
    """Raised when an input file or in-memory dataset violates the expected format."""


class NumericalError(Exception):
    """Raised when training or inference produces a non-finite quantity."""
