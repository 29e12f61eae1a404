"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid or unsatisfiable configuration."""


class DegenerateDropError(RuntimeError):
    """A drop produced an ill-conditioned multi-user channel and must be resampled."""
