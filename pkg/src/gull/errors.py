"""Exception hierarchy shared across the codec.

Each CLI error class maps to a distinct process exit code (see cli.EXIT_CODES).
"""


class GullError(Exception):
    """Base class for all codec errors."""


class ConfigError(GullError):
    """Invalid model configuration or unsupported sample rate."""


class ShapeError(GullError):
    """Tensor dimensions inconsistent with the active configuration."""


class BitstreamError(GullError):
    """Base class for .gull stream parsing failures."""


class BadMagicError(BitstreamError):
    """Stream does not start with the GULL magic."""


class BadVersionError(BitstreamError):
    """Stream version not understood by this reader."""


class TruncatedStreamError(BitstreamError):
    """Stream shorter than the header or declared payload."""


class HeaderFieldError(BitstreamError):
    """Header field outside its valid range (sr code, hierarchy count, ...)."""


class WeightsError(GullError):
    """Base class for .gullw container failures."""


class WeightsFormatError(WeightsError):
    """Corrupt magic, manifest, or metadata in a weights file."""


class WeightsVersionError(WeightsError):
    """Weights container version not understood by this reader."""


class WeightsShapeError(WeightsError):
    """Manifest/payload mismatch or tensor shapes inconsistent with config."""


class AudioIOError(GullError):
    """Unreadable or unsupported WAV input/output."""
