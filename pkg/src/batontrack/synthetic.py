"""Synthetic conducting data: a canonical 4/4 baton-tip path plus
parameterized extraneous-movement perturbations and bounded noise.

Serves as demo input and as the labeled oracle for pipeline and classifier
tests. Every output is a pure function of (spec, meter, tempo, bars, rate),
so identical arguments give bitwise-identical sequences.

Perturbation models (displacement added to the control path):
    knee      unipolar vertical dips, two per bar
    waist     lateral sway, one cycle per bar
    feet      lateral sway with a 2-bar period plus a small weight-transfer
              vertical dip each bar (the dip survives bar averaging; the
              sway's sign alternates bar to bar and cancels)
    wrist     constant-radius horizontal wobble near 5 Hz, blurring beat
              regions without touching the vertical downbeat anchor
    upper_arm radial scaling about the pattern centroid, one cycle per bar

Perturbation frequencies are quantized to whole half-cycles per bar so each
class's average over many bars keeps its shape instead of washing out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InvalidSpec
from .fusion import GRAVITY_M_S2, ImuSample
from .geometry import BatonSpec, Quaternion, quat_to_rotation
from .pipeline import (
    DEFAULT_BEATS_PER_BAR,
    DEFAULT_TEMPO_BPM,
    CaptureFrame,
    CaptureSequence,
    MovementClass,
    SequenceMeta,
    bar_length_s,
)

DEFAULT_AMPLITUDE_M = 0.04
DEFAULT_NOISE_M = 0.003
DEFAULT_RATE_HZ = 120.0

# Canonical 4/4 beat layout: down to the bottom-center ictus, inner-left,
# outer-right, then up and back; about 0.4 m wide and 0.35 m tall with a
# gentle 0.02 m depth modulation. Phase 0 is the beat-1 ictus, the path's
# lowest point, which is what the downbeat detector anchors on; the guard
# points either side of it brake the spline into a sharp V so the vertical
# minimum clears its neighbors by more than twice the default noise bound
# and the detected downbeat cannot jitter.
_WAYPOINT_PHASES = np.array(
    [0.0, 0.006, 0.03, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 0.97, 0.994, 1.0]
)
_WAYPOINTS = np.array(
    [
        [0.000, 0.000, 0.0],
        [0.008, 0.035, 0.001],
        [0.020, 0.075, 0.004],
        [-0.060, 0.140, 0.0141],
        [-0.150, 0.045, 0.02],
        [0.020, 0.160, 0.0141],
        [0.250, 0.055, 0.0],
        [0.220, 0.180, -0.0141],
        [0.100, 0.280, -0.02],
        [0.020, 0.350, -0.0141],
        [-0.015, 0.110, -0.004],
        [-0.006, 0.032, -0.001],
        [0.000, 0.000, 0.0],
    ]
)
_BASE_SPLINE = CubicSpline(_WAYPOINT_PHASES, _WAYPOINTS, axis=0, bc_type="periodic")

# mean of the closed base path, the scaling center for upper_arm distortion
_PATTERN_CENTROID = np.mean(_BASE_SPLINE(np.linspace(0.0, 1.0, 4096, endpoint=False)), axis=0)
_UPPER_ARM_REF_RADIUS_M = 0.2

_DEFAULT_CYCLES = {
    MovementClass.KNEE: 2.0,
    MovementClass.WAIST: 1.0,
    MovementClass.FEET: 0.5,
    MovementClass.UPPER_ARM: 1.0,
}
_WRIST_TARGET_HZ = 5.0
_FEET_DIP_FRACTION = 0.5


@dataclass(frozen=True)
class PerturbationSpec:
    """Which movement to synthesize and how strongly.

    amplitude_m None picks the class default (0 for control, 0.04 m
    otherwise); frequency_hz None picks the class's cycles-per-bar default.
    """

    movement: MovementClass
    amplitude_m: float | None = None
    frequency_hz: float | None = None
    seed: int = 0
    noise_sigma_m: float = DEFAULT_NOISE_M

    def __post_init__(self):
        object.__setattr__(self, "movement", MovementClass.coerce(self.movement))
        amp = self.amplitude_m
        if amp is None:
            amp = 0.0 if self.movement is MovementClass.CONTROL else DEFAULT_AMPLITUDE_M
        if amp < 0 or self.noise_sigma_m < 0:
            raise InvalidSpec("amplitude and noise must be non-negative")
        if self.frequency_hz is not None and self.frequency_hz < 0:
            raise InvalidSpec("frequency must be non-negative")
        if self.movement is MovementClass.CONTROL and amp != 0.0:
            raise InvalidSpec("control spec forces amplitude 0")
        object.__setattr__(self, "amplitude_m", float(amp))


def base_path(phase) -> np.ndarray:
    """Canonical 4/4 tip path; phase 0..1 spans one bar, periodic beyond."""
    return _BASE_SPLINE(np.mod(np.asarray(phase, dtype=float), 1.0))


def _cycles_per_bar(spec: PerturbationSpec, bar_s: float) -> float:
    """Half-cycle-per-bar quantization of the requested frequency."""
    if spec.frequency_hz is None:
        if spec.movement is MovementClass.WRIST:
            freq = _WRIST_TARGET_HZ
        else:
            return _DEFAULT_CYCLES.get(spec.movement, 1.0)
    else:
        freq = spec.frequency_hz
    return max(0.5, round(2.0 * freq * bar_s) / 2.0)


def perturbation(spec: PerturbationSpec, phase_global, bar_s: float) -> np.ndarray:
    """Displacement (meters) added to the control path; phase counts bars."""
    phi = np.asarray(phase_global, dtype=float)
    disp = np.zeros(phi.shape + (3,))
    amp = spec.amplitude_m
    if spec.movement is MovementClass.CONTROL or amp == 0.0:
        return disp
    cycles = _cycles_per_bar(spec, bar_s)

    if spec.movement is MovementClass.KNEE:
        disp[..., 1] = -amp * np.sin(math.pi * cycles * phi) ** 2
    elif spec.movement is MovementClass.WAIST:
        disp[..., 0] = amp * np.sin(2.0 * math.pi * cycles * phi)
    elif spec.movement is MovementClass.FEET:
        disp[..., 0] = amp * np.sin(2.0 * math.pi * cycles * phi)
        # weight transfer dips the body once per bar regardless of sway period
        disp[..., 1] = -_FEET_DIP_FRACTION * amp * np.sin(math.pi * phi) ** 2
    elif spec.movement is MovementClass.WRIST:
        disp[..., 0] = amp * np.sin(2.0 * math.pi * cycles * phi)
        disp[..., 2] = amp * np.cos(2.0 * math.pi * cycles * phi)
    elif spec.movement is MovementClass.UPPER_ARM:
        radial = base_path(phi) - _PATTERN_CENTROID
        envelope = (amp / _UPPER_ARM_REF_RADIUS_M) * np.cos(2.0 * math.pi * cycles * phi)
        disp = envelope[..., None] * radial
    return disp


def _ball_noise(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    """i.i.d. displacements uniform in the ball of the given radius.

    Bounded by construction, so per-point deviation against a clean path
    stays below the configured amplitude.
    """
    direction = rng.standard_normal((n, 3))
    norm = np.linalg.norm(direction, axis=1, keepdims=True)
    norm[norm < 1e-12] = 1.0
    r = radius * rng.random(n) ** (1.0 / 3.0)
    return direction / norm * r[:, None]


def _time_grid(bars: int, bar_s: float, rate_hz: float) -> np.ndarray:
    # last frame lands at or just past the final bar boundary so the final
    # bar always segments as complete
    n = int(math.ceil(bars * bar_s * rate_hz)) + 1
    return np.arange(n) / rate_hz


def generate_synthetic(spec: PerturbationSpec, *, bars: int,
                       tempo_bpm: float = DEFAULT_TEMPO_BPM,
                       beats_per_bar: int = DEFAULT_BEATS_PER_BAR,
                       rate_hz: float = DEFAULT_RATE_HZ) -> CaptureSequence:
    """Labeled synthetic tip-position sequence covering ``bars`` full bars."""
    if bars < 1:
        raise InvalidSpec(f"bars must be >= 1, got {bars}")
    if tempo_bpm <= 0 or beats_per_bar < 1 or rate_hz <= 0:
        raise InvalidSpec("tempo, meter and rate must be positive")
    bar_s = bar_length_s(tempo_bpm, beats_per_bar)
    times = _time_grid(bars, bar_s, rate_hz)
    phase = times / bar_s
    tip = base_path(phase) + perturbation(spec, phase, bar_s)
    if spec.noise_sigma_m > 0:
        rng = np.random.default_rng(spec.seed)
        tip = tip + _ball_noise(rng, times.shape[0], spec.noise_sigma_m)
    meta = SequenceMeta(tempo_bpm=tempo_bpm, beats_per_bar=beats_per_bar,
                        label=spec.movement, start_anchor_t=0.0)
    return CaptureSequence(times, tip, meta)


def _orientation_program(phase: np.ndarray) -> list[Quaternion]:
    """Gentle baton rocking, identity at phase 0: swing about z plus a faster
    nod about x, both bar-periodic."""
    qs = []
    for phi in phase:
        qz = Quaternion.from_rotation_vector(
            np.array([0.0, 0.0, 0.2 * math.sin(2.0 * math.pi * phi)])
        )
        qx = Quaternion.from_rotation_vector(
            np.array([0.15 * math.sin(4.0 * math.pi * phi), 0.0, 0.0])
        )
        qs.append(qz * qx)
    return qs


def generate_paired_streams(spec: PerturbationSpec, *, bars: int,
                            tempo_bpm: float = DEFAULT_TEMPO_BPM,
                            beats_per_bar: int = DEFAULT_BEATS_PER_BAR,
                            rate_hz: float = 100.0,
                            baton: BatonSpec | None = None,
                            ) -> tuple[CaptureSequence, list[ImuSample], list[CaptureFrame]]:
    """Tip sequence plus consistent IMU and palm streams reproducing it.

    The baton rocks through a smooth orientation program; gyro rates are the
    exact discrete body rates of that program and the accelerometer reads
    gravity only (linear acceleration omitted so fusion sees a clean tilt
    reference). Forward kinematics over these streams recovers the tip path.
    """
    baton = baton if baton is not None else BatonSpec()
    tip_seq = generate_synthetic(spec, bars=bars, tempo_bpm=tempo_bpm,
                                 beats_per_bar=beats_per_bar, rate_hz=rate_hz)
    bar_s = bar_length_s(tempo_bpm, beats_per_bar)
    phase = tip_seq.times / bar_s
    qs = _orientation_program(phase)
    offset = np.array([0.0, baton.length_m, 0.0])
    up = np.array([0.0, GRAVITY_M_S2, 0.0])

    imu: list[ImuSample] = []
    palm: list[CaptureFrame] = []
    dt = 1.0 / rate_hz
    for k, (t, q) in enumerate(zip(tip_seq.times, qs)):
        rot = quat_to_rotation(q)
        if k == 0:
            gyro = np.zeros(3)
        else:
            step = qs[k - 1].conjugate() * q
            gyro = step.to_rotation_vector() / dt
        accel = rot.T @ up
        imu.append(ImuSample(t=float(t), accel=accel, gyro=gyro))
        palm.append(CaptureFrame(t=float(t), pos=tip_seq.positions[k] - rot @ offset))
    return tip_seq, imu, palm


def static_imu_stream(q: Quaternion, *, duration_s: float,
                      rate_hz: float = 100.0) -> list[ImuSample]:
    """Motionless IMU at a fixed orientation: gravity-only accel, zero gyro."""
    rot = quat_to_rotation(q)
    accel = rot.T @ np.array([0.0, GRAVITY_M_S2, 0.0])
    n = int(round(duration_s * rate_hz))
    return [
        ImuSample(t=k / rate_hz, accel=accel.copy(), gyro=np.zeros(3))
        for k in range(n)
    ]
