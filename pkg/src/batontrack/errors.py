"""Exception types shared across the package.

Two families: ``ValidationError`` for bad inputs or violated preconditions
(CLI exit code 2) and ``RuntimeFailure`` for I/O and transport trouble
(CLI exit code 1).
"""


class ValidationError(ValueError):
    """Input data or arguments violate a documented precondition."""


class RuntimeFailure(RuntimeError):
    """Operation failed for environmental reasons (I/O, transport)."""


# rotation algebra

class NonUnitQuaternion(ValidationError):
    """Quaternion norm is too far from 1 to trust."""


class DegenerateMatrix(ValidationError):
    """Matrix is rank-deficient where full rank is required."""


class SingularSystem(ValidationError):
    """Linear system is singular or too ill-conditioned to solve."""


class EmptyInput(ValidationError):
    """A non-empty collection was required."""


class ExcessiveSpread(ValidationError):
    """Rotation samples are spread too widely to average meaningfully."""


# orientation fusion

class NonMonotonicTime(ValidationError):
    """Sample timestamp does not advance past the filter state."""


class ExcessiveGap(ValidationError):
    """Time gap between samples exceeds the filter's step limit."""


class ZeroWidth(ValidationError):
    """Smoothing window width must be at least one sample."""


# trajectory pipeline

class MalformedRow(ValidationError):
    """A capture CSV row could not be parsed."""

    def __init__(self, row: int, reason: str):
        super().__init__(f"row {row}: {reason}")
        self.row = row
        self.reason = reason


class NonMonotonicTimestamps(ValidationError):
    """Frame timestamps are not strictly increasing."""


class UnknownUnit(ValidationError):
    """Capture CSV declares a unit other than m or mm."""


class EmptySequence(ValidationError):
    """Capture sequence contains no frames."""


class NoCompleteBar(ValidationError):
    """Capture sequence does not span a single complete bar."""


class TooFewFrames(ValidationError):
    """A raw bar needs at least two frames to resample."""


class InvalidN(ValidationError):
    """Requested resample count is incompatible with the bar's meter."""


class MixedShapes(ValidationError):
    """Bars being averaged disagree in point count, tempo or meter."""


class IndivisibleN(ValidationError):
    """Point count is not divisible by beats per bar."""


# registration / classification

class ShapeMismatch(ValidationError):
    """Point sets being compared have incompatible shapes."""


class DegenerateGeometry(ValidationError):
    """Point set is too close to collinear for a unique rotation."""


class NoReferences(ValidationError):
    """Classification requires at least one reference trajectory."""


# capture, calibration and sessions

class InvalidSpec(ValidationError):
    """Synthetic perturbation spec violates its invariants."""


class MotionDuringCalibration(ValidationError):
    """Gyro activity detected while calibrating the control frame."""


class TooFewSamples(ValidationError):
    """Calibration needs more static readings."""


class CalibrationMissing(ValidationError):
    """Live processing requires a calibrated control frame."""


class SourceDisconnected(RuntimeFailure):
    """Capture source stopped delivering samples."""


class IoFailure(RuntimeFailure):
    """Session file could not be read or written."""


class SchemaVersionMismatch(ValidationError):
    """Session file carries an unsupported version tag."""


class BindFailure(RuntimeFailure):
    """Stream server could not bind its endpoint."""
