"""Exception types shared across the package."""


class DegenerateSampleError(RuntimeError):
    """A sample is too close to a singular configuration; draw a new one."""


class TopologyError(RuntimeError):
    """Extracted curves and sign domains disagree; the grid is too coarse."""


class ConfigError(ValueError):
    """Invalid experiment configuration."""
