"""Exception hierarchy shared across the toolkit."""


class NightIspError(Exception):
    """Base class for all toolkit errors."""


class DecodeError(NightIspError):
    """Raised when an input image file cannot be decoded as required."""


class SchemaError(NightIspError):
    """Raised when a metadata sidecar is missing or carries an invalid field.

    The offending field name is stored in ``field``.
    """

    def __init__(self, field: str, message: str | None = None):
        self.field = field
        super().__init__(message or f"invalid or missing metadata field: {field!r}")


class DimensionError(NightIspError):
    """Raised for invalid or mismatched image dimensions."""


class DegenerateCalibration(NightIspError):
    """Raised when a calibration frame cannot produce a usable gain map."""


class DegenerateImage(NightIspError):
    """Raised when an image carries no usable signal for an estimator."""


class KnotError(NightIspError):
    """Raised for invalid piecewise-gamma knot lists."""


class SpecError(NightIspError):
    """Raised when a pipeline spec fails validation.

    ``stage_index`` is the index of the offending stage, or None for
    spec-level problems.
    """

    def __init__(self, message: str, stage_index: int | None = None):
        self.stage_index = stage_index
        if stage_index is not None:
            message = f"stage {stage_index}: {message}"
        super().__init__(message)


class StageExecutionError(NightIspError):
    """Wraps an error raised while executing a pipeline stage."""

    def __init__(self, stage_index: int, stage_id: str, cause: BaseException):
        self.stage_index = stage_index
        self.stage_id = stage_id
        self.__cause__ = cause
        super().__init__(f"stage {stage_index} ({stage_id}) failed: {cause}")


class UnknownRendition(NightIspError):
    """Raised when a vote references a rendition absent from the manifest."""


class MissingTime(NightIspError):
    """Raised when a scored solution has no timing entry."""


class EmptyPool(NightIspError):
    """Raised when the scheduler has no eligible renditions to pair."""
