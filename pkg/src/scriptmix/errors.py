"""Exception types shared across the package.

The CLI maps these to distinct exit codes (config 2, data 3, divergence 4).
"""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class DataError(ValueError):
    """Missing, malformed, or incompatible dataset content."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss or gradient."""
