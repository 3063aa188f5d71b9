"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid run, grid or scenario parameters."""


class NonFiniteFieldError(FloatingPointError):
    """A field contains NaN or Inf values."""
