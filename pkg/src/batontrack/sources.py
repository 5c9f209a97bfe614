"""Capture sources: synthetic mock, ASCII-line replay, and raw serial.

Wire format is line-based ASCII for auditability:
    IMU lines:  ``t,ax,ay,az,gx,gy,gz`` (seconds, m/s^2, rad/s)
    palm lines: ``t,px,py,pz``          (seconds, meters)
Decimal point, no spaces, ``\\n`` line ends.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .errors import SourceDisconnected, ValidationError
from .fusion import ImuSample
from .pipeline import CaptureFrame, MovementClass
from .synthetic import PerturbationSpec, generate_paired_streams

RATE_HZ_MIN = 20.0
RATE_HZ_MAX = 500.0


@dataclass(frozen=True)
class SourceDescriptor:
    """Where IMU and palm samples come from.

    kind: ``mock`` | ``replay`` | ``serial``; replay reads the ASCII line
    files at ``path`` (IMU) and ``palm_path``; serial reads IMU lines from a
    device at ``port``/``baud`` (palm must then be mock or replay).
    """

    kind: str = "mock"
    rate_hz: float = 100.0
    path: str | None = None
    port: str | None = None
    baud: int = 115200
    palm_kind: str = "mock"
    palm_path: str | None = None
    mock_class: MovementClass = MovementClass.CONTROL
    mock_bars: int = 4
    mock_seed: int = 0

    def __post_init__(self):
        if self.kind not in ("mock", "replay", "serial"):
            raise ValidationError(f"unknown source kind {self.kind!r}")
        if self.palm_kind not in ("mock", "replay"):
            raise ValidationError(f"unknown palm source kind {self.palm_kind!r}")
        if not RATE_HZ_MIN <= self.rate_hz <= RATE_HZ_MAX:
            raise ValidationError(
                f"rate_hz {self.rate_hz} outside [{RATE_HZ_MIN:.0f}, {RATE_HZ_MAX:.0f}]"
            )
        if self.kind == "replay" and not self.path:
            raise ValidationError("replay source needs an IMU line file path")
        if self.kind == "serial" and not self.port:
            raise ValidationError("serial source needs a port")
        if self.palm_kind == "replay" and not self.palm_path:
            raise ValidationError("replay palm source needs a palm line file path")
        object.__setattr__(self, "mock_class", MovementClass.coerce(self.mock_class))


def parse_source_descriptor(imu_spec: str, palm_spec: str | None = None,
                            rate_hz: float = 100.0) -> SourceDescriptor:
    """CLI syntax: ``mock[:class[:bars[:seed]]]``, ``replay:PATH``,
    ``serial:PORT[:BAUD]``; palm: ``mock`` or ``replay:PATH``."""
    fields: dict = {"rate_hz": rate_hz}
    parts = imu_spec.split(":")
    if parts[0] == "mock":
        fields["kind"] = "mock"
        if len(parts) > 1 and parts[1]:
            fields["mock_class"] = MovementClass.coerce(parts[1])
        if len(parts) > 2:
            fields["mock_bars"] = int(parts[2])
        if len(parts) > 3:
            fields["mock_seed"] = int(parts[3])
    elif parts[0] == "replay":
        if len(parts) < 2:
            raise ValidationError("replay source syntax: replay:PATH")
        fields["kind"] = "replay"
        fields["path"] = ":".join(parts[1:])
    elif parts[0] == "serial":
        if len(parts) < 2:
            raise ValidationError("serial source syntax: serial:PORT[:BAUD]")
        fields["kind"] = "serial"
        fields["port"] = parts[1]
        if len(parts) > 2:
            fields["baud"] = int(parts[2])
    else:
        raise ValidationError(f"unknown source spec {imu_spec!r}")

    if palm_spec is None or palm_spec == "mock":
        fields["palm_kind"] = "mock"
    elif palm_spec.startswith("replay:"):
        fields["palm_kind"] = "replay"
        fields["palm_path"] = palm_spec.split(":", 1)[1]
    else:
        raise ValidationError(f"unknown palm source spec {palm_spec!r}")
    return SourceDescriptor(**fields)


# line formats

def format_imu_line(s: ImuSample) -> str:
    a = s.accel.tolist()
    g = s.gyro.tolist()
    return f"{float(s.t)!r},{a[0]!r},{a[1]!r},{a[2]!r},{g[0]!r},{g[1]!r},{g[2]!r}"


def parse_imu_line(line: str) -> ImuSample:
    parts = line.split(",")
    if len(parts) != 7:
        raise ValidationError(f"IMU line needs 7 fields, got {len(parts)}: {line!r}")
    vals = [float(p) for p in parts]
    return ImuSample(t=vals[0], accel=np.array(vals[1:4]), gyro=np.array(vals[4:7]))


def format_palm_line(f: CaptureFrame) -> str:
    p = f.pos.tolist()
    return f"{float(f.t)!r},{p[0]!r},{p[1]!r},{p[2]!r}"


def parse_palm_line(line: str) -> CaptureFrame:
    parts = line.split(",")
    if len(parts) != 4:
        raise ValidationError(f"palm line needs 4 fields, got {len(parts)}: {line!r}")
    vals = [float(p) for p in parts]
    return CaptureFrame(t=vals[0], pos=np.array(vals[1:4]))


def write_imu_lines(samples: Iterable[ImuSample], path) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        for s in samples:
            fh.write(format_imu_line(s) + "\n")


def write_palm_lines(frames: Iterable[CaptureFrame], path) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        for f in frames:
            fh.write(format_palm_line(f) + "\n")


def read_imu_lines(path) -> list[ImuSample]:
    with open(path, "r", encoding="ascii") as fh:
        return [parse_imu_line(line.rstrip("\n")) for line in fh if line.strip()]


def read_palm_lines(path) -> list[CaptureFrame]:
    with open(path, "r", encoding="ascii") as fh:
        return [parse_palm_line(line.rstrip("\n")) for line in fh if line.strip()]


class StreamSource:
    """A pair of sample iterators plus the nominal rate."""

    def __init__(self, imu: Iterable[ImuSample], palm: Iterable[CaptureFrame],
                 rate_hz: float, tip_truth=None):
        self._imu = imu
        self._palm = palm
        self.rate_hz = rate_hz
        self.tip_truth = tip_truth  # generator ground truth when synthetic

    def imu_stream(self) -> Iterator[ImuSample]:
        return iter(self._imu)

    def palm_stream(self) -> Iterator[CaptureFrame]:
        return iter(self._palm)


class SerialLineSource:
    """Reads IMU lines from a serial device (or any line-oriented file).

    Uses termios directly when the path is a tty, so no serial stack is
    required for the plain ASCII protocol.
    """

    def __init__(self, port: str, baud: int = 115200, rate_hz: float = 100.0):
        self.port = port
        self.baud = baud
        self.rate_hz = rate_hz

    def imu_stream(self) -> Iterator[ImuSample]:
        try:
            fh = open(self.port, "r", encoding="ascii", errors="replace")
        except OSError as exc:
            raise SourceDisconnected(f"cannot open {self.port}: {exc}") from exc
        with fh:
            if os.isatty(fh.fileno()):
                self._configure_tty(fh.fileno())
            for line in fh:
                line = line.strip()
                if line:
                    yield parse_imu_line(line)

    def _configure_tty(self, fd: int) -> None:
        import termios
        import tty

        rate_const = getattr(termios, f"B{self.baud}", None)
        if rate_const is None:
            raise ValidationError(f"unsupported baud rate {self.baud}")
        tty.setraw(fd)
        attrs = termios.tcgetattr(fd)
        attrs[4] = rate_const
        attrs[5] = rate_const
        termios.tcsetattr(fd, termios.TCSANOW, attrs)


def open_source(desc: SourceDescriptor, *, baton_length_m: float = 0.35,
                tempo_bpm: float = 76.0, beats_per_bar: int = 4) -> StreamSource:
    """Materialize a descriptor into streams ready for pairing."""
    if desc.kind == "mock":
        from .geometry import BatonSpec

        spec = PerturbationSpec(desc.mock_class, seed=desc.mock_seed)
        tip, imu, palm = generate_paired_streams(
            spec, bars=desc.mock_bars, tempo_bpm=tempo_bpm,
            beats_per_bar=beats_per_bar, rate_hz=desc.rate_hz,
            baton=BatonSpec(baton_length_m),
        )
        return StreamSource(imu, palm, desc.rate_hz, tip_truth=tip)
    if desc.kind == "replay":
        imu = read_imu_lines(desc.path)
        if desc.palm_kind != "replay":
            raise ValidationError("replay source needs a replay palm file")
        palm = read_palm_lines(desc.palm_path)
        return StreamSource(imu, palm, desc.rate_hz)
    # serial
    serial = SerialLineSource(desc.port, desc.baud, desc.rate_hz)
    if desc.palm_kind != "replay":
        raise ValidationError("serial source needs a replay palm file for the palm stream")
    palm = read_palm_lines(desc.palm_path)
    return StreamSource(serial.imu_stream(), palm, desc.rate_hz)


def pair_streams(imu: Iterable[ImuSample],
                 palm: Iterable[CaptureFrame]) -> Iterator[tuple[ImuSample, CaptureFrame]]:
    """Zero-order-hold pairing: each IMU sample takes the latest palm sample
    at or before its timestamp; IMU samples before the first palm are dropped."""
    palm_iter = iter(palm)
    current: CaptureFrame | None = None
    upcoming = next(palm_iter, None)
    for sample in imu:
        while upcoming is not None and upcoming.t <= sample.t:
            current = upcoming
            upcoming = next(palm_iter, None)
        if current is None:
            continue
        yield sample, current
