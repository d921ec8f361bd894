"""Exception types raised across the package."""


class SdtradeError(Exception):
    """Base class for all package-specific errors."""


class ChannelMismatch(SdtradeError, ValueError):
    """Operation requires a different number of color channels."""


class TooSmall(SdtradeError, ValueError):
    """Plane is too small for the requested neighborhood operation."""


class EmptyOutput(SdtradeError, ValueError):
    """Pooling would produce a plane with zero rows or columns."""


class WindowTooLarge(SdtradeError, ValueError):
    """Sliding window exceeds the flattened image length."""


class TagMismatch(SdtradeError, TypeError):
    """Distance requested between features of different kinds."""


class DimensionMismatch(SdtradeError, ValueError):
    """Operands have incompatible dimensionality or length."""


class ZeroGradient(SdtradeError, ValueError):
    """Gradient projection requires a nonzero gradient."""


class DomainError(SdtradeError, ValueError):
    """Argument outside the mathematical domain of a special function."""


class EmptyDataset(SdtradeError, ValueError):
    """Experiment requires a non-empty dataset."""


class ZeroEstimate(SdtradeError, RuntimeError):
    """Gradient estimate was identically zero even after retries."""


class BadRecordLength(SdtradeError, ValueError):
    """Binary dataset file does not consist of whole records."""


class FileMissing(SdtradeError, FileNotFoundError):
    """Expected dataset file or directory does not exist."""


class DecodeError(SdtradeError, ValueError):
    """Image file could not be decoded to 8-bit RGB."""


class MixedDimensions(SdtradeError, ValueError):
    """Images in one dataset must all share the same dimensions."""


class FingerprintMismatch(SdtradeError, ValueError):
    """Feature cache was written with a different extractor configuration."""


class ConfigError(SdtradeError, ValueError):
    """Invalid command-line or run configuration."""
