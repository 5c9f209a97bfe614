"""Orientation fusion for the baton IMU plus sliding-window smoothing.

A deterministic complementary filter: gyro rates are integrated exactly via
the quaternion exponential, then the tilt implied by the accelerometer pulls
the estimate back by a small gain each step. Yaw is gyro-only (gravity cannot
observe it) and is absorbed by per-session calibration.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ExcessiveGap, NonMonotonicTime, ZeroWidth
from .geometry import Quaternion, as_vec3, quat_to_rotation

GRAVITY_M_S2 = 9.81
ACCEL_LIMIT_M_S2 = 16.0 * GRAVITY_M_S2
GYRO_LIMIT_RAD_S = 35.0

# Steps longer than this cannot be integrated safely; caller must reset.
MAX_STEP_S = 0.1

# Accelerometer trust is full within this band around |g| and ramps to zero
# at twice the band, so vigorous beats do not corrupt tilt.
ACCEL_TRUST_BAND_M_S2 = 2.0

DEFAULT_TILT_GAIN = 0.02

_WORLD_UP = np.array([0.0, 1.0, 0.0])


@dataclass(frozen=True)
class ImuSample:
    """One accelerometer + gyro reading, body frame."""

    t: float
    accel: np.ndarray  # m/s^2
    gyro: np.ndarray  # rad/s

    def __post_init__(self):
        if not np.isfinite(self.t):
            raise ValueError("sample time must be finite")
        accel = as_vec3(self.accel, "accel")
        gyro = as_vec3(self.gyro, "gyro")
        if np.linalg.norm(accel) > ACCEL_LIMIT_M_S2:
            raise ValueError(f"|accel| exceeds sensor range {ACCEL_LIMIT_M_S2:.0f} m/s^2")
        if np.linalg.norm(gyro) > GYRO_LIMIT_RAD_S:
            raise ValueError(f"|gyro| exceeds sensor range {GYRO_LIMIT_RAD_S:.0f} rad/s")
        object.__setattr__(self, "accel", accel)
        object.__setattr__(self, "gyro", gyro)


@dataclass(frozen=True)
class FilterState:
    """Current body->world estimate plus the filter's step bookkeeping."""

    q: Quaternion
    last_t: float
    tilt_gain: float = DEFAULT_TILT_GAIN

    def __post_init__(self):
        if not 0.0 <= self.tilt_gain <= 1.0:
            raise ValueError("tilt_gain must lie in [0, 1]")
        object.__setattr__(self, "q", self.q.normalized())

    @classmethod
    def initial(cls, t: float, q: Quaternion | None = None,
                tilt_gain: float = DEFAULT_TILT_GAIN) -> "FilterState":
        return cls(q if q is not None else Quaternion.identity(), t, tilt_gain)


def _accel_trust(accel_norm: float) -> float:
    err = abs(accel_norm - GRAVITY_M_S2)
    if err <= ACCEL_TRUST_BAND_M_S2:
        return 1.0
    if err >= 2.0 * ACCEL_TRUST_BAND_M_S2:
        return 0.0
    return (2.0 * ACCEL_TRUST_BAND_M_S2 - err) / ACCEL_TRUST_BAND_M_S2


def fuse_step(state: FilterState, sample: ImuSample) -> tuple[FilterState, Quaternion]:
    """Advance the filter by one sample; returns (new state, orientation)."""
    dt = sample.t - state.last_t
    if dt <= 0.0:
        raise NonMonotonicTime(f"dt = {dt:.6g} s; sample time must advance")
    if dt > MAX_STEP_S:
        raise ExcessiveGap(f"dt = {dt:.6g} s exceeds {MAX_STEP_S} s; reset the filter")

    q = state.q * Quaternion.from_rotation_vector(sample.gyro * dt)

    gain = state.tilt_gain * _accel_trust(float(np.linalg.norm(sample.accel)))
    accel_norm = float(np.linalg.norm(sample.accel))
    if gain > 0.0 and accel_norm > 1e-9:
        a_world = quat_to_rotation(q) @ (sample.accel / accel_norm)
        axis = np.cross(a_world, _WORLD_UP)
        sin_err = float(np.linalg.norm(axis))
        cos_err = float(np.dot(a_world, _WORLD_UP))
        if sin_err > 1e-12:
            angle = np.arctan2(sin_err, cos_err)
            correction = Quaternion.from_rotation_vector(axis * (gain * angle / sin_err))
            q = correction * q
        elif cos_err < 0.0:
            # estimate is exactly upside-down; nudge about a fixed horizontal axis
            correction = Quaternion.from_rotation_vector(np.array([gain * np.pi, 0.0, 0.0]))
            q = correction * q

    q = q.normalized()
    return FilterState(q, sample.t, state.tilt_gain), q


def fuse_stream(samples, initial: FilterState) -> list[tuple[float, Quaternion]]:
    """Fold fuse_step over a time-ordered sample list."""
    out: list[tuple[float, Quaternion]] = []
    state = initial
    for i, sample in enumerate(samples):
        try:
            state, q = fuse_step(state, sample)
        except (NonMonotonicTime, ExcessiveGap) as exc:
            raise type(exc)(f"sample {i}: {exc}") from None
        out.append((sample.t, q))
    return out


def smooth_sliding_window(stream, width: int) -> np.ndarray:
    """Trailing boxcar mean: output i averages the last min(width, i+1) inputs."""
    if width < 1:
        raise ZeroWidth(f"window width must be >= 1, got {width}")
    arr = np.asarray(stream, dtype=float)
    if arr.ndim == 0 or arr.shape[0] == 0 or width == 1:
        return arr.copy()
    n = arr.shape[0]
    csum = np.concatenate([np.zeros((1,) + arr.shape[1:]), np.cumsum(arr, axis=0)], axis=0)
    counts = np.minimum(np.arange(1, n + 1), width)
    lo = np.arange(1, n + 1) - counts
    sums = csum[1:] - csum[lo]
    shape = (n,) + (1,) * (arr.ndim - 1)
    return sums / counts.reshape(shape)


class SlidingWindowSmoother:
    """Incremental counterpart of smooth_sliding_window for live streams."""

    def __init__(self, width: int):
        if width < 1:
            raise ZeroWidth(f"window width must be >= 1, got {width}")
        self.width = width
        self._buffer: deque[np.ndarray] = deque(maxlen=width)

    def push(self, value) -> np.ndarray:
        self._buffer.append(as_vec3(value, "sample"))
        return np.sum(self._buffer, axis=0) / len(self._buffer)

    def reset(self) -> None:
        self._buffer.clear()
