"""Exception types shared across the package."""


class DocargError(Exception):
    """Base class for package-specific errors."""


class DataError(DocargError):
    """Malformed dataset records or invalid event instances."""


class SequenceError(DocargError):
    """Marked-sequence construction failed (bad spans, missing templates, ...)."""


class BackendError(DocargError):
    """Encoder backend misuse: over-long input, shape mismatch, missing decoder."""


class ConfigError(DocargError):
    """Invalid run configuration."""


class DivergenceError(DocargError):
    """Training produced a non-finite loss."""
