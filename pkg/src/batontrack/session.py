"""Session recording: config snapshot, raw streams, computed tip path and
per-bar verdicts, persisted as length-prefixed JSON lines under a version
header.

File layout (ASCII): header line ``{"format": "batontrack.session",
"version": 1}`` followed by records ``<payload-byte-length> <json>\\n``.
The length prefix makes truncation detectable at an exact byte offset.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import Settings
from .errors import IoFailure, SchemaVersionMismatch
from .fusion import ImuSample
from .geometry import ControlFrame
from .pipeline import CaptureFrame, CaptureSequence, MovementClass, SequenceMeta
from .registration import ClassificationResult, RankedMatch

SESSION_FORMAT = "batontrack.session"
SESSION_VERSION = 1


def control_to_dict(control: ControlFrame) -> dict:
    return {
        "r0": [[float(v) for v in row] for row in control.r0],
        "sample_count": control.sample_count,
    }


def control_from_dict(data: dict) -> ControlFrame:
    return ControlFrame(r0=np.array(data["r0"], dtype=float),
                        sample_count=int(data["sample_count"]))


def save_control(control: ControlFrame, path) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        json.dump(control_to_dict(control), fh)
        fh.write("\n")


def load_control(path) -> ControlFrame:
    with open(path, "r", encoding="ascii") as fh:
        return control_from_dict(json.load(fh))


def _result_to_dict(result: ClassificationResult) -> dict:
    return {
        "ranking": [
            {
                "label": m.label.value,
                "mean_m": m.mean_m,
                "max_m": m.max_m,
                "per_beat_m": [float(v) for v in m.per_beat_mean_m],
                "shift": m.shift,
            }
            for m in result.ranking
        ],
        "chosen": result.chosen.value,
        "shift_used": result.shift_used,
    }


def _result_from_dict(data: dict) -> ClassificationResult:
    ranking = [
        RankedMatch(
            label=MovementClass.coerce(m["label"]),
            mean_m=float(m["mean_m"]),
            max_m=float(m["max_m"]),
            per_beat_mean_m=np.array(m["per_beat_m"], dtype=float),
            shift=int(m["shift"]),
        )
        for m in data["ranking"]
    ]
    return ClassificationResult(ranking=ranking,
                                chosen=MovementClass.coerce(data["chosen"]),
                                shift_used=int(data["shift_used"]))


@dataclass
class SessionRecord:
    """Everything needed to replay and audit one practice session."""

    settings: Settings
    control: ControlFrame
    imu: list[ImuSample] = field(default_factory=list)
    palm: list[CaptureFrame] = field(default_factory=list)
    tip: CaptureSequence | None = None
    classifications: list[tuple[int, ClassificationResult]] = field(default_factory=list)


def _records(session: SessionRecord):
    yield {"kind": "config", "settings": asdict(session.settings)}
    yield {"kind": "control", **control_to_dict(session.control)}
    yield {
        "kind": "imu",
        "samples": [
            [s.t, *(float(v) for v in s.accel), *(float(v) for v in s.gyro)]
            for s in session.imu
        ],
    }
    yield {
        "kind": "palm",
        "frames": [[f.t, *(float(v) for v in f.pos)] for f in session.palm],
    }
    if session.tip is not None:
        meta = session.tip.meta
        yield {
            "kind": "tip",
            "tempo_bpm": meta.tempo_bpm,
            "beats_per_bar": meta.beats_per_bar,
            "label": meta.label.value if meta.label else None,
            "start_anchor_t": meta.start_anchor_t,
            "times": [float(t) for t in session.tip.times],
            "positions": [[float(v) for v in p] for p in session.tip.positions],
        }
    for bar_index, result in session.classifications:
        yield {"kind": "classification", "bar_index": bar_index, **_result_to_dict(result)}


def save_session(session: SessionRecord, path) -> None:
    try:
        with open(path, "w", encoding="ascii", newline="") as fh:
            fh.write(json.dumps({"format": SESSION_FORMAT, "version": SESSION_VERSION},
                                separators=(",", ":")) + "\n")
            for record in _records(session):
                payload = json.dumps(record, separators=(",", ":"))
                fh.write(f"{len(payload.encode('ascii'))} {payload}\n")
    except OSError as exc:
        raise IoFailure(f"cannot write session to {path}: {exc}") from exc


def load_session(path) -> SessionRecord:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read session from {path}: {exc}") from exc

    newline = data.find(b"\n")
    if newline < 0:
        raise IoFailure("truncated at byte 0: missing header line")
    try:
        header = json.loads(data[:newline].decode("ascii"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise IoFailure(f"bad header: {exc}") from None
    if header.get("format") != SESSION_FORMAT:
        raise SchemaVersionMismatch(f"not a session file: format {header.get('format')!r}")
    if header.get("version") != SESSION_VERSION:
        raise SchemaVersionMismatch(
            f"unsupported session version {header.get('version')!r}; expected {SESSION_VERSION}"
        )

    settings: Settings | None = None
    control: ControlFrame | None = None
    imu: list[ImuSample] = []
    palm: list[CaptureFrame] = []
    tip: CaptureSequence | None = None
    classifications: list[tuple[int, ClassificationResult]] = []

    offset = newline + 1
    while offset < len(data):
        space = data.find(b" ", offset)
        line_end = data.find(b"\n", offset)
        if space < 0 or (0 <= line_end < space):
            raise IoFailure(f"truncated at byte {offset}: missing length prefix")
        try:
            length = int(data[offset:space])
        except ValueError:
            raise IoFailure(f"truncated at byte {offset}: bad length prefix") from None
        start = space + 1
        end = start + length
        if end + 1 > len(data) or data[end:end + 1] != b"\n":
            raise IoFailure(f"truncated at byte {offset}: record shorter than declared")
        try:
            record = json.loads(data[start:end].decode("ascii"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise IoFailure(f"corrupt record at byte {start}: {exc}") from None
        offset = end + 1

        kind = record.get("kind")
        if kind == "config":
            settings = Settings(**record["settings"])
        elif kind == "control":
            control = control_from_dict(record)
        elif kind == "imu":
            imu = [
                ImuSample(t=row[0], accel=np.array(row[1:4]), gyro=np.array(row[4:7]))
                for row in record["samples"]
            ]
        elif kind == "palm":
            palm = [CaptureFrame(t=row[0], pos=np.array(row[1:4])) for row in record["frames"]]
        elif kind == "tip":
            meta = SequenceMeta(
                tempo_bpm=record["tempo_bpm"],
                beats_per_bar=record["beats_per_bar"],
                label=MovementClass.coerce(record["label"]) if record["label"] else None,
                start_anchor_t=record["start_anchor_t"],
            )
            tip = CaptureSequence(np.array(record["times"], dtype=float),
                                  np.array(record["positions"], dtype=float), meta)
        elif kind == "classification":
            classifications.append((int(record["bar_index"]), _result_from_dict(record)))
        else:
            raise IoFailure(f"unknown record kind {kind!r}")

    if settings is None or control is None:
        raise IoFailure("session file missing config or control records")
    return SessionRecord(settings=settings, control=control, imu=imu, palm=palm,
                         tip=tip, classifications=classifications)
