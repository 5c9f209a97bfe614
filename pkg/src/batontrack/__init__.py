"""batontrack: baton-tip trajectory reconstruction, average-trajectory
analysis and extraneous-movement detection for conducting practice."""

from .config import Settings
from .estimators import BarExtractor, MovementClassifier
from .fusion import (
    FilterState,
    ImuSample,
    SlidingWindowSmoother,
    fuse_step,
    fuse_stream,
    smooth_sliding_window,
)
from .geometry import (
    BatonSpec,
    ControlFrame,
    Quaternion,
    average_rotations,
    baton_tip_position,
    left_divide,
    project_to_so3,
    quat_to_rotation,
    relative_rotation,
)
from .live import calibrate_control, live_loop, replay_session, run_session
from .pipeline import (
    AverageTrajectory,
    BarSegment,
    CaptureFrame,
    CaptureSequence,
    MovementClass,
    SequenceMeta,
    average_bars,
    bar_length_s,
    beat_slices,
    export_capture_csv,
    extract_bars,
    import_capture_csv,
    load_average,
    load_references,
    resample_bar,
    save_average,
    segment_bars,
    shift_to_downbeat,
)
from .registration import (
    ClassificationResult,
    DeviationProfile,
    RigidTransform,
    classify_extraneous,
    compare_to_reference,
    pointwise_deviation,
    rigid_register,
)
from .session import SessionRecord, load_control, load_session, save_control, save_session
from .sources import SourceDescriptor, StreamSource, open_source, pair_streams
from .synthetic import PerturbationSpec, base_path, generate_paired_streams, generate_synthetic

__version__ = "0.1.0"

__all__ = [
    "AverageTrajectory",
    "BarExtractor",
    "BarSegment",
    "BatonSpec",
    "CaptureFrame",
    "CaptureSequence",
    "ClassificationResult",
    "ControlFrame",
    "DeviationProfile",
    "FilterState",
    "ImuSample",
    "MovementClass",
    "MovementClassifier",
    "PerturbationSpec",
    "Quaternion",
    "RigidTransform",
    "SequenceMeta",
    "SessionRecord",
    "Settings",
    "SlidingWindowSmoother",
    "SourceDescriptor",
    "StreamSource",
    "average_bars",
    "average_rotations",
    "bar_length_s",
    "base_path",
    "baton_tip_position",
    "beat_slices",
    "calibrate_control",
    "classify_extraneous",
    "compare_to_reference",
    "export_capture_csv",
    "extract_bars",
    "fuse_step",
    "fuse_stream",
    "generate_paired_streams",
    "generate_synthetic",
    "import_capture_csv",
    "left_divide",
    "live_loop",
    "load_average",
    "load_control",
    "load_references",
    "load_session",
    "open_source",
    "pair_streams",
    "pointwise_deviation",
    "project_to_so3",
    "quat_to_rotation",
    "relative_rotation",
    "replay_session",
    "resample_bar",
    "rigid_register",
    "run_session",
    "save_average",
    "save_control",
    "save_session",
    "segment_bars",
    "shift_to_downbeat",
    "smooth_sliding_window",
]
