"""Exception types shared across the package."""


class ProfilerError(Exception):
    """Base class for package-specific errors."""


class ShapeError(ProfilerError):
    """Tensor dimensions do not line up."""


class NumericError(ProfilerError):
    """NaN/Inf reached a place that requires finite values."""


class ContractError(ProfilerError):
    """An API was called outside its stated contract."""


class LengthError(ProfilerError):
    """A signal or sequence is too short for the requested operation."""


class FormatError(ProfilerError):
    """A file could not be parsed in its expected format."""


class ConfigError(ProfilerError):
    """Bad configuration value, unknown key or checkpoint mismatch."""


class DataError(ProfilerError):
    """Corpus-level problem (malformed tree, unusable records)."""
