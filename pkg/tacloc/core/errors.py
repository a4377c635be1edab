"""Exception hierarchy shared by every tacloc module."""


class TaclocError(Exception):
    """Base class for all tacloc errors."""


class ConfigError(TaclocError, ValueError):
    """Invalid pipeline configuration or configuration file."""


class GeometryError(TaclocError, ValueError):
    """Invalid geometric input (transform, cloud, grid or mesh)."""


class FormatError(TaclocError, ValueError):
    """A file could not be parsed in the expected format."""


class PatchGrowthError(TaclocError):
    """A surface patch could not be grown on the given mesh."""
