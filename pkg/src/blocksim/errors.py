"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Raised for invalid distribution or simulation configuration.

    The CLI maps this to exit code 2 (usage/config error).
    """
