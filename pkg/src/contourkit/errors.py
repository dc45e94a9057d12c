"""Exception types raised across the toolkit."""


class ContourKitError(Exception):
    """Base class for all toolkit errors."""


class ConstantVolume(ContourKitError):
    """Raw grid has a single distinct value; min-max normalization is undefined."""


class DimensionMismatch(ContourKitError):
    """Grid/mask dimensions disagree with their companion volume or metadata."""


class IndexOutOfRange(ContourKitError):
    """Slice index outside the volume extent for the requested axis."""


class ParallelRays(ContourKitError):
    """Two-ray placement is undefined for (near-)parallel ray directions."""


class NonUnitQuaternion(ContourKitError):
    """Rotation input is not a unit quaternion."""


class NeedTwoKeys(ContourKitError):
    """Inter-slice interpolation requires at least two key slices."""


class UnsortedKeys(ContourKitError):
    """Key slice indices must be strictly increasing."""


class NoStroke(ContourKitError):
    """Session log contains no stroke; initial exploration time is undefined."""


class NoSessionEnd(ContourKitError):
    """Session log has no end event; task completion time is undefined."""


class NonIncreasingTime(ContourKitError):
    """Gaze sample timestamps must strictly increase."""


class CorruptFile(ContourKitError):
    """A stored file failed structural validation.

    The ``field`` attribute names the offending piece where known.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class VersionMismatch(ContourKitError):
    """Stored file was written by an incompatible format version."""


class MalformedEvent(ContourKitError):
    """A session-log line failed to parse; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line
