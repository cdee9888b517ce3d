"""Exception hierarchy shared across the package."""

from __future__ import annotations


class TrackingError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(TrackingError, ValueError):
    """A value violates a domain invariant (non-finite, out of range, ...)."""


class DegenerateBoxError(ValidationError):
    """A box has zero or negative extent."""


class NumericFailureError(TrackingError):
    """A filter step produced non-finite values or a singular system."""


class EmptyGalleryError(TrackingError, LookupError):
    """Appearance distance requested against a track with no stored features."""


class ConfigError(TrackingError):
    """Invalid or inconsistent configuration."""


class DataFormatError(TrackingError):
    """A detection/track/config file failed to parse or validate.

    ``line`` carries the 1-based line number when known.
    """

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
