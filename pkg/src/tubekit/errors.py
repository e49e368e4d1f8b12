"""Exception types shared across tubekit modules."""


class TubekitError(Exception):
    """Base class for all tubekit errors."""


class VolumeFormatError(TubekitError, ValueError):
    """A volume file is malformed, truncated, or uses an unsupported encoding."""


class GridMismatchError(TubekitError, ValueError):
    """Two volumes that must share dims and spacing do not."""


class EmptyShapeError(TubekitError, ValueError):
    """An operation that requires foreground voxels received none."""


class DegenerateShapeError(TubekitError, ValueError):
    """A shape is too small or too flat for the requested operation."""


class UnreachableTargetError(TubekitError, ValueError):
    """A path was requested between voxels not connected through foreground."""


class UndefinedMetricError(TubekitError, ValueError):
    """A metric is undefined for the given inputs (for example an empty surface)."""
