"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration, loop syntax, or precondition violation (CLI exit code 2)."""


class NumericalFaultError(RuntimeError):
    """A numerical invariant was violated beyond tolerance (CLI exit code 3)."""
