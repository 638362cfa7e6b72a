"""Exception hierarchy shared across the toolkit."""


class VolforgeError(Exception):
    """Base class for all toolkit errors."""


class DataError(VolforgeError):
    """Invalid or insufficient input data (bad prices, short series, bad CSV)."""


class ConfigError(VolforgeError):
    """Invalid configuration value or experiment config file."""


class FitError(VolforgeError):
    """Model estimation failed (non-convergence, degenerate data)."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
