"""Natural-rate-of-interest estimation with median-unbiased signal-to-noise ratios."""

__version__ = "0.1.0"


class RstarError(Exception):
    """Base class for package errors."""


class InputError(RstarError):
    """Bad user input: malformed files, inconsistent options, out-of-range samples."""


class NumericalError(RstarError):
    """A numerical routine failed (singular covariance, optimizer breakdown)."""


class DataAssetError(RstarError):
    """A required look-up asset is missing."""
