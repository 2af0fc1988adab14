"""Exception types shared across the toolkit."""


class UnmixingError(Exception):
    """Base class for toolkit failures that carry a CLI exit code."""

    exit_code = 1


class ConfigError(UnmixingError, ValueError):
    """Invalid or inconsistent configuration."""

    exit_code = 2


class NumericalError(UnmixingError, RuntimeError):
    """Divergence, singular systems or other numerical breakdown."""

    exit_code = 3


class DatasetError(UnmixingError, OSError):
    """Missing or malformed dataset / result files."""

    exit_code = 4
