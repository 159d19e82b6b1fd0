"""Exception types shared across the package.

The CLI maps these onto process exit codes: SceneFormatError -> 3,
everything else derived from LayoutError -> 4, plain ValueError -> 2.
"""


class LayoutError(Exception):
    """Base class for pipeline failures."""


class GeometryError(LayoutError):
    """Degenerate or singular geometry (horizon rays, zero-length vectors,
    inconsistent floor/ceiling boundaries)."""


class CoverageError(LayoutError):
    """A boundary stack ended up with columns that no view covers."""


class SceneFormatError(LayoutError):
    """A scene file failed schema or validation checks on load."""


class MetricError(LayoutError):
    """A metric is undefined for the given input (empty union, grid not
    normalized)."""
