"""Exception classes shared across the package."""


class ModelError(ValueError):
    """Invalid model configuration, domain violation, or degenerate model."""


class DataError(ValueError):
    """Empty, malformed, or degenerate observation data."""


class ConfigError(ModelError):
    """Problem in a configuration file (missing key, bad value, unknown key)."""


class UsageError(Exception):
    """Command-line usage problem (unknown flag, missing argument)."""
