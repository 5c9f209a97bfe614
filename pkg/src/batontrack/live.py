"""Calibration and the real-time loop: capture -> fuse -> align -> forward
kinematics -> smooth, with per-bar classification when references are loaded.
"""

from __future__ import annotations

from typing import Iterable, Iterator

import numpy as np

from .config import Settings
from .errors import CalibrationMissing, MotionDuringCalibration, TooFewSamples
from .fusion import FilterState, ImuSample, SlidingWindowSmoother, fuse_step
from .geometry import (
    BatonSpec,
    ControlFrame,
    Quaternion,
    average_rotations,
    baton_tip_position,
    quat_to_rotation,
    relative_rotation,
)
from .messages import BarAnalysisMessage, PoseMessage, StreamMessage
from .pipeline import (
    AverageTrajectory,
    CaptureFrame,
    CaptureSequence,
    SequenceMeta,
    bar_length_s,
    extract_bars,
)
from .registration import classify_extraneous
from .sources import StreamSource, pair_streams

CALIBRATION_GYRO_LIMIT_RAD_S = 0.05
CALIBRATION_MIN_SAMPLES = 10

# boosted gain so the tilt estimate settles well inside a short static capture
CALIBRATION_TILT_GAIN = 0.05

# fraction of the stream (from the end) averaged into the control rotation
CALIBRATION_SETTLE_FRACTION = 0.5


def calibrate_control(samples: Iterable[ImuSample], *,
                      tilt_gain: float = CALIBRATION_TILT_GAIN) -> ControlFrame:
    """Average fused orientations of a static, axes-aligned capture.

    The device must be motionless (gyro magnitude under 0.05 rad/s
    throughout); the fused estimates from the settled tail of the stream are
    averaged into the control rotation matrix.
    """
    samples = list(samples)
    if len(samples) < CALIBRATION_MIN_SAMPLES:
        raise TooFewSamples(
            f"calibration needs >= {CALIBRATION_MIN_SAMPLES} samples, got {len(samples)}"
        )
    for i, s in enumerate(samples):
        if float(np.linalg.norm(s.gyro)) >= CALIBRATION_GYRO_LIMIT_RAD_S:
            raise MotionDuringCalibration(
                f"sample {i}: |gyro| = {np.linalg.norm(s.gyro):.3f} rad/s during calibration"
            )

    dt = samples[1].t - samples[0].t if len(samples) > 1 else 0.01
    state = FilterState.initial(samples[0].t - dt, tilt_gain=tilt_gain)
    quats: list[Quaternion] = []
    for s in samples:
        state, q = fuse_step(state, s)
        quats.append(q)
    tail = max(1, int(len(quats) * CALIBRATION_SETTLE_FRACTION))
    rotations = [quat_to_rotation(q) for q in quats[-tail:]]
    return ControlFrame(r0=average_rotations(rotations), sample_count=len(rotations))


class _LiveBarBuffer:
    """Accumulates smoothed tip frames and closes bars at tempo boundaries."""

    def __init__(self, settings: Settings, references: list[AverageTrajectory]):
        self.settings = settings
        self.references = references
        self.bar_s = bar_length_s(settings.tempo_bpm, settings.beats_per_bar)
        self.anchor: float | None = None
        self.next_index = 0
        self.frames: list[CaptureFrame] = []

    def push(self, frame: CaptureFrame) -> Iterator[BarAnalysisMessage]:
        if self.anchor is None:
            self.anchor = frame.t
        self.frames.append(frame)
        while frame.t - self.anchor >= (self.next_index + 1) * self.bar_s:
            yield self._close_bar()

    def _close_bar(self) -> BarAnalysisMessage:
        k = self.next_index
        self.next_index += 1
        lo = self.anchor + k * self.bar_s
        hi = self.anchor + (k + 1) * self.bar_s
        kept = [f for f in self.frames if lo <= f.t]
        seq = CaptureSequence.from_frames(
            kept,
            SequenceMeta(
                tempo_bpm=self.settings.tempo_bpm,
                beats_per_bar=self.settings.beats_per_bar,
                start_anchor_t=lo,
            ),
        )
        bars = extract_bars(seq, n_points=self.settings.n_points)
        result = classify_extraneous(bars[0], self.references)
        # frames before the boundary are finished with
        self.frames = [f for f in self.frames if f.t >= hi]
        return BarAnalysisMessage(bar_index=k, result=result)


def live_loop(source: StreamSource, control: ControlFrame, baton: BatonSpec,
              smoothing_width: int, *, settings: Settings | None = None,
              references: list[AverageTrajectory] | None = None,
              ) -> Iterator[StreamMessage]:
    """Stream poses (and bar verdicts, when references are given) from a source.

    Per paired sample: fuse the IMU reading, convert to a rotation, take the
    rotation relative to the calibrated control frame, translate baton-length
    along its Y axis from the palm, and smooth the tip over a sliding window.
    """
    if control is None:
        raise CalibrationMissing("live loop requires a calibrated control frame")
    settings = settings if settings is not None else Settings()
    smoother = SlidingWindowSmoother(smoothing_width)
    bars = _LiveBarBuffer(settings, references) if references else None
    state: FilterState | None = None

    for imu, palm in pair_streams(source.imu_stream(), source.palm_stream()):
        if state is None:
            state = FilterState.initial(imu.t - 1.0 / source.rate_hz,
                                        tilt_gain=settings.tilt_gain)
        state, q = fuse_step(state, imu)
        r_r = quat_to_rotation(q)
        r_a = relative_rotation(r_r, control)
        tip = baton_tip_position(r_a, palm.pos, baton)
        tip_smoothed = smoother.push(tip)
        yield PoseMessage(t=imu.t, palm=palm.pos, tip=tip_smoothed)
        if bars is not None:
            yield from bars.push(CaptureFrame(t=imu.t, pos=tip_smoothed))


class _RecordingSource(StreamSource):
    """Tees a source's streams into logs while they are consumed."""

    def __init__(self, inner: StreamSource):
        super().__init__([], [], inner.rate_hz, tip_truth=getattr(inner, "tip_truth", None))
        self._inner = inner
        self.imu_log: list[ImuSample] = []
        self.palm_log: list[CaptureFrame] = []

    def imu_stream(self):
        for sample in self._inner.imu_stream():
            self.imu_log.append(sample)
            yield sample

    def palm_stream(self):
        for frame in self._inner.palm_stream():
            self.palm_log.append(frame)
            yield frame


def run_session(source: StreamSource, control: ControlFrame, *,
                settings: Settings | None = None,
                references: list[AverageTrajectory] | None = None):
    """Drive live_loop to exhaustion, recording everything.

    Returns (SessionRecord, messages). Import of SessionRecord is deferred to
    keep live/session decoupled at module load.
    """
    from .session import SessionRecord

    settings = settings if settings is not None else Settings()
    recording = _RecordingSource(source)
    baton = BatonSpec(settings.baton_length_m)
    messages: list[StreamMessage] = []
    times: list[float] = []
    tips: list[np.ndarray] = []
    classifications = []
    for msg in live_loop(recording, control, baton, settings.smoothing_width,
                         settings=settings, references=references):
        messages.append(msg)
        if isinstance(msg, PoseMessage):
            times.append(msg.t)
            tips.append(msg.tip)
        elif isinstance(msg, BarAnalysisMessage):
            classifications.append((msg.bar_index, msg.result))

    tip_seq = None
    if times:
        tip_seq = CaptureSequence(
            np.array(times),
            np.stack(tips),
            SequenceMeta(tempo_bpm=settings.tempo_bpm,
                         beats_per_bar=settings.beats_per_bar,
                         start_anchor_t=times[0]),
        )
    record = SessionRecord(settings=settings, control=control,
                           imu=recording.imu_log, palm=recording.palm_log,
                           tip=tip_seq, classifications=classifications)
    return record, messages


def replay_session(record, *, references: list[AverageTrajectory] | None = None):
    """Re-run live_loop over a recorded session's raw streams.

    With the same references the emitted message sequence is bit-identical
    to the original run; without them, only poses are emitted.
    """
    source = StreamSource(record.imu, record.palm, record.settings.rate_hz)
    return run_session(source, record.control, settings=record.settings,
                       references=references)
