"""Offline trajectory pipeline: capture import, bar segmentation, resampling,
downbeat alignment and per-class average trajectories.

Capture CSV schema (bit-exact):
    line 1: ``unit,m`` or ``unit,mm``
    line 2: ``frame,t,x,y,z``
    rows:   integer frame, decimal seconds, three decimals in the declared
            unit; comma separated, ``.`` decimal point, ``\\n`` line ends.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    EmptyInput,
    EmptySequence,
    IndivisibleN,
    InvalidN,
    MalformedRow,
    MixedShapes,
    NoCompleteBar,
    NonMonotonicTimestamps,
    TooFewFrames,
    UnknownUnit,
)

DEFAULT_TEMPO_BPM = 76.0
DEFAULT_BEATS_PER_BAR = 4
DEFAULT_N_POINTS = 256


class MovementClass(str, Enum):
    """The six movement conditions: control plus five extraneous movements."""

    CONTROL = "control"
    KNEE = "knee"
    WAIST = "waist"
    FEET = "feet"
    WRIST = "wrist"
    UPPER_ARM = "upper_arm"

    @classmethod
    def coerce(cls, value) -> "MovementClass":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value))
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown movement class {value!r}; expected one of {valid}") from None


# tie-break and reporting order
CLASS_ORDER = {m: i for i, m in enumerate(MovementClass)}


def bar_length_s(tempo_bpm: float, beats_per_bar: int) -> float:
    """Duration of one bar in seconds (e.g. 3.1579 s at 76 bpm in 4/4)."""
    return beats_per_bar * 60.0 / tempo_bpm


@dataclass(frozen=True)
class CaptureFrame:
    """One time-stamped tip (or palm) position, meters, world frame."""

    t: float
    pos: np.ndarray

    def __post_init__(self):
        if not np.isfinite(self.t):
            raise ValueError("frame time must be finite")
        pos = np.asarray(self.pos, dtype=float)
        if pos.shape != (3,) or not np.all(np.isfinite(pos)):
            raise ValueError("frame position must be a finite 3-vector")
        object.__setattr__(self, "pos", pos)


@dataclass(frozen=True)
class SequenceMeta:
    tempo_bpm: float = DEFAULT_TEMPO_BPM
    beats_per_bar: int = DEFAULT_BEATS_PER_BAR
    label: MovementClass | None = None
    start_anchor_t: float | None = None

    def __post_init__(self):
        if self.tempo_bpm <= 0:
            raise ValueError("tempo_bpm must be positive")
        if self.beats_per_bar < 1:
            raise ValueError("beats_per_bar must be >= 1")
        if self.label is not None:
            object.__setattr__(self, "label", MovementClass.coerce(self.label))


@dataclass(frozen=True)
class CaptureSequence:
    """Time-ordered capture positions plus the session metadata."""

    times: np.ndarray
    positions: np.ndarray
    meta: SequenceMeta = field(default_factory=SequenceMeta)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        positions = np.asarray(self.positions, dtype=float)
        if times.ndim != 1 or positions.shape != (times.shape[0], 3):
            raise ValueError(
                f"expected times (n,) and positions (n, 3); got {times.shape} and {positions.shape}"
            )
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(positions))):
            raise ValueError("capture data must be finite")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise NonMonotonicTimestamps("frame timestamps must strictly increase")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "positions", positions)

    def __len__(self) -> int:
        return int(self.times.shape[0])

    @property
    def frames(self) -> list[CaptureFrame]:
        return [CaptureFrame(float(t), p) for t, p in zip(self.times, self.positions)]

    @classmethod
    def from_frames(cls, frames, meta: SequenceMeta | None = None) -> "CaptureSequence":
        frames = list(frames)
        times = np.array([f.t for f in frames], dtype=float)
        positions = (
            np.stack([f.pos for f in frames]) if frames else np.zeros((0, 3))
        )
        return cls(times, positions, meta if meta is not None else SequenceMeta())


@dataclass(frozen=True)
class RawBar:
    """One bar's frames as segmented, before resampling."""

    times: np.ndarray
    positions: np.ndarray
    bar_index: int
    tempo_bpm: float
    beats_per_bar: int


@dataclass(frozen=True)
class BarSegment:
    """One bar resampled to a fixed point count."""

    points: np.ndarray
    tempo_bpm: float
    beats_per_bar: int
    source_bar_index: int = 0

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 2 or points.shape[1] != 3:
            raise ValueError(f"bar points must be (n, 3), got {points.shape}")
        if not np.all(np.isfinite(points)):
            raise ValueError("bar points must be finite")
        if points.shape[0] % self.beats_per_bar != 0:
            raise IndivisibleN(
                f"{points.shape[0]} points not divisible by {self.beats_per_bar} beats"
            )
        object.__setattr__(self, "points", points)

    @property
    def n(self) -> int:
        return int(self.points.shape[0])


@dataclass(frozen=True)
class AverageTrajectory:
    """Point-to-point mean path of one movement class."""

    label: MovementClass
    points: np.ndarray
    sample_bars: int
    tempo_bpm: float
    beats_per_bar: int

    def __post_init__(self):
        object.__setattr__(self, "label", MovementClass.coerce(self.label))
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 2 or points.shape[1] != 3:
            raise ValueError(f"average points must be (n, 3), got {points.shape}")
        if self.sample_bars < 1:
            raise ValueError("sample_bars must be >= 1")
        object.__setattr__(self, "points", points)

    @property
    def n(self) -> int:
        return int(self.points.shape[0])


def import_capture_csv(path_or_file, *, tempo_bpm: float = DEFAULT_TEMPO_BPM,
                       beats_per_bar: int = DEFAULT_BEATS_PER_BAR,
                       label: MovementClass | str | None = None,
                       start_anchor_t: float | None = None) -> CaptureSequence:
    """Parse a capture CSV into a sequence; coordinates converted to meters."""
    if hasattr(path_or_file, "read"):
        text = path_or_file.read()
    else:
        with open(path_or_file, "r", encoding="ascii") as fh:
            text = fh.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) < 2:
        raise MalformedRow(1, "file must start with unit and column headers")

    unit_fields = lines[0].split(",")
    if len(unit_fields) != 2 or unit_fields[0] != "unit":
        raise MalformedRow(1, f"expected 'unit,<m|mm>', got {lines[0]!r}")
    if unit_fields[1] not in ("m", "mm"):
        raise UnknownUnit(f"unit {unit_fields[1]!r} not supported (m or mm)")
    scale = 1.0 if unit_fields[1] == "m" else 1e-3

    if lines[1] != "frame,t,x,y,z":
        raise MalformedRow(2, f"expected 'frame,t,x,y,z', got {lines[1]!r}")

    times: list[float] = []
    coords: list[list[float]] = []
    for row, line in enumerate(lines[2:], start=3):
        fields = line.split(",")
        if len(fields) != 5:
            raise MalformedRow(row, f"expected 5 fields, got {len(fields)}")
        try:
            int(fields[0])
            t = float(fields[1])
            xyz = [float(fields[2]), float(fields[3]), float(fields[4])]
        except ValueError as exc:
            raise MalformedRow(row, str(exc)) from None
        if not (math.isfinite(t) and all(map(math.isfinite, xyz))):
            raise MalformedRow(row, "non-finite value")
        if times and t <= times[-1]:
            raise NonMonotonicTimestamps(f"row {row}: t = {t} does not advance")
        times.append(t)
        coords.append(xyz)

    positions = np.array(coords, dtype=float).reshape(len(times), 3) * scale
    meta = SequenceMeta(tempo_bpm=tempo_bpm, beats_per_bar=beats_per_bar,
                        label=MovementClass.coerce(label) if label is not None else None,
                        start_anchor_t=start_anchor_t)
    return CaptureSequence(np.array(times), positions, meta)


def export_capture_csv(seq: CaptureSequence, path_or_file, *, unit: str = "m") -> None:
    """Write a sequence in the capture CSV schema (deterministic bytes)."""
    if unit not in ("m", "mm"):
        raise UnknownUnit(f"unit {unit!r} not supported (m or mm)")
    scale = 1.0 if unit == "m" else 1e3
    lines = [f"unit,{unit}", "frame,t,x,y,z"]
    for i, (t, pos) in enumerate(zip(seq.times.tolist(), seq.positions)):
        x, y, z = (pos * scale).tolist()
        lines.append(f"{i},{t!r},{x!r},{y!r},{z!r}")
    payload = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(payload)
    else:
        with open(path_or_file, "w", encoding="ascii", newline="") as fh:
            fh.write(payload)


def segment_bars(seq: CaptureSequence) -> list[RawBar]:
    """Split a sequence into complete bars of tempo-derived length.

    Bar k covers [anchor + k*L, anchor + (k+1)*L); the trailing partial bar
    is discarded, as are frames before the anchor.
    """
    if len(seq) == 0:
        raise EmptySequence("sequence has no frames")
    meta = seq.meta
    length = bar_length_s(meta.tempo_bpm, meta.beats_per_bar)
    anchor = meta.start_anchor_t if meta.start_anchor_t is not None else float(seq.times[0])
    rel = seq.times - anchor
    # tiny slack absorbs float droop when the span is an exact bar multiple
    n_bars = int(math.floor(float(rel[-1]) / length + 1e-9))
    if n_bars < 1:
        raise NoCompleteBar(
            f"sequence spans {max(float(rel[-1]), 0.0):.3f} s < one bar ({length:.4f} s)"
        )
    indices = np.floor(rel / length).astype(int)
    bars = []
    for k in range(n_bars):
        mask = indices == k
        bars.append(
            RawBar(
                times=seq.times[mask].copy(),
                positions=seq.positions[mask].copy(),
                bar_index=k,
                tempo_bpm=meta.tempo_bpm,
                beats_per_bar=meta.beats_per_bar,
            )
        )
    return bars


def resample_bar(raw: RawBar, n_points: int = DEFAULT_N_POINTS) -> BarSegment:
    """Linear interpolation at n_points uniform instants across the bar's frames."""
    if n_points < raw.beats_per_bar or n_points % raw.beats_per_bar != 0:
        raise InvalidN(
            f"n_points = {n_points} must be a positive multiple of {raw.beats_per_bar} beats"
        )
    if raw.times.shape[0] < 2:
        raise TooFewFrames(f"bar {raw.bar_index} has {raw.times.shape[0]} frame(s); need >= 2")
    ts = np.linspace(float(raw.times[0]), float(raw.times[-1]), n_points)
    points = np.column_stack(
        [np.interp(ts, raw.times, raw.positions[:, d]) for d in range(3)]
    )
    return BarSegment(points, raw.tempo_bpm, raw.beats_per_bar, raw.bar_index)


def shift_to_downbeat(bar: BarSegment, anchor: int | str = "auto") -> BarSegment:
    """Circularly rotate the bar so it starts at beat 1.

    Auto mode anchors on the lowest vertical (Y) point, the beat-1 ictus;
    pass an explicit index when the heuristic is untrustworthy.
    """
    if anchor == "auto":
        idx = int(np.argmin(bar.points[:, 1]))
    else:
        idx = int(anchor) % bar.n
    return BarSegment(
        np.roll(bar.points, -idx, axis=0), bar.tempo_bpm, bar.beats_per_bar, bar.source_bar_index
    )


def average_bars(bars, label: MovementClass | str) -> AverageTrajectory:
    """Point-to-point mean over bars; summation ordered by source bar index."""
    bars = list(bars)
    if not bars:
        raise EmptyInput("average_bars requires at least one bar")
    first = bars[0]
    for b in bars[1:]:
        if (b.n, b.tempo_bpm, b.beats_per_bar) != (first.n, first.tempo_bpm, first.beats_per_bar):
            raise MixedShapes(
                f"bar ({b.n}, {b.tempo_bpm}, {b.beats_per_bar}) disagrees with "
                f"({first.n}, {first.tempo_bpm}, {first.beats_per_bar})"
            )
    ordered = sorted(bars, key=lambda b: b.source_bar_index)
    mean = np.mean(np.stack([b.points for b in ordered]), axis=0)
    return AverageTrajectory(
        label=MovementClass.coerce(label),
        points=mean,
        sample_bars=len(bars),
        tempo_bpm=first.tempo_bpm,
        beats_per_bar=first.beats_per_bar,
    )


def beat_slices(n_points: int, beats_per_bar: int) -> list[range]:
    """Split n_points indices into beats_per_bar contiguous equal ranges."""
    if beats_per_bar < 1 or n_points % beats_per_bar != 0:
        raise IndivisibleN(f"{n_points} points not divisible into {beats_per_bar} beats")
    width = n_points // beats_per_bar
    return [range(j * width, (j + 1) * width) for j in range(beats_per_bar)]


def extract_bars(seq: CaptureSequence, n_points: int = DEFAULT_N_POINTS,
                 anchor: int | str = "auto") -> list[BarSegment]:
    """segment -> resample -> downbeat-shift, the full per-bar pipeline."""
    return [shift_to_downbeat(resample_bar(raw, n_points), anchor) for raw in segment_bars(seq)]


def average_to_dict(avg: AverageTrajectory) -> dict:
    return {
        "label": avg.label.value,
        "n": avg.n,
        "tempo_bpm": avg.tempo_bpm,
        "beats_per_bar": avg.beats_per_bar,
        "points": [list(map(float, p)) for p in avg.points],
        "sample_bars": avg.sample_bars,
    }


def average_from_dict(data: dict) -> AverageTrajectory:
    points = np.array(data["points"], dtype=float)
    if points.shape != (int(data["n"]), 3):
        raise ValueError(f"points shape {points.shape} disagrees with n = {data['n']}")
    return AverageTrajectory(
        label=MovementClass.coerce(data["label"]),
        points=points,
        sample_bars=int(data["sample_bars"]),
        tempo_bpm=float(data["tempo_bpm"]),
        beats_per_bar=int(data["beats_per_bar"]),
    )


def save_average(avg: AverageTrajectory, path) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        json.dump(average_to_dict(avg), fh)
        fh.write("\n")


def load_average(path) -> AverageTrajectory:
    with open(path, "r", encoding="ascii") as fh:
        return average_from_dict(json.load(fh))


def load_references(directory) -> list[AverageTrajectory]:
    """Load every .json average in a directory, ordered by class."""
    refs = []
    for name in sorted(os.listdir(directory)):
        if name.endswith(".json"):
            refs.append(load_average(os.path.join(directory, name)))
    refs.sort(key=lambda a: CLASS_ORDER[a.label])
    return refs
