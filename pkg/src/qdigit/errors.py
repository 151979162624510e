"""Exception hierarchy shared across the package; CLI maps these to exit codes."""


class QDigitError(Exception):
    """Base class for package-specific failures."""


class ConfigError(QDigitError):
    """Invalid configuration value, file, or combination of flags."""


class DataError(QDigitError):
    """Unreadable, malformed, or structurally invalid input data."""


class NumericError(QDigitError):
    """Non-finite values or other numeric breakdown during training."""
