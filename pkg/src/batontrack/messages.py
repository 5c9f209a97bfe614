"""Stream message schema: one JSON object per message on the live endpoint.

Field names on the wire are fixed: ``type``, ``t``, ``palm``, ``tip``,
``bar_index``, ``ranking``, ``chosen``, ``text``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .pipeline import MovementClass
from .registration import ClassificationResult, RankedMatch


@dataclass(frozen=True)
class PoseMessage:
    t: float
    palm: np.ndarray
    tip: np.ndarray

    def to_dict(self) -> dict:
        return {
            "type": "pose",
            "t": float(self.t),
            "palm": [float(v) for v in self.palm],
            "tip": [float(v) for v in self.tip],
        }


@dataclass(frozen=True)
class BarAnalysisMessage:
    bar_index: int
    result: ClassificationResult

    def to_dict(self) -> dict:
        return {
            "type": "bar_analysis",
            "bar_index": self.bar_index,
            "ranking": [m.to_dict() for m in self.result.ranking],
            "chosen": self.result.chosen.value,
            "shift_used": self.result.shift_used,
        }


@dataclass(frozen=True)
class StatusMessage:
    text: str

    def to_dict(self) -> dict:
        return {"type": "status", "text": self.text}


StreamMessage = PoseMessage | BarAnalysisMessage | StatusMessage


def message_to_json(msg: StreamMessage) -> str:
    return json.dumps(msg.to_dict(), separators=(",", ":"))


def message_from_json(line: str) -> StreamMessage:
    data = json.loads(line)
    kind = data.get("type")
    if kind == "pose":
        return PoseMessage(
            t=float(data["t"]),
            palm=np.array(data["palm"], dtype=float),
            tip=np.array(data["tip"], dtype=float),
        )
    if kind == "bar_analysis":
        ranking = [
            RankedMatch(
                label=MovementClass.coerce(entry["label"]),
                mean_m=float(entry["mean_m"]),
                max_m=float(entry["max_m"]),
                per_beat_mean_m=np.array(entry["per_beat_m"], dtype=float),
                shift=int(data["shift_used"]),
            )
            for entry in data["ranking"]
        ]
        result = ClassificationResult(
            ranking=ranking,
            chosen=MovementClass.coerce(data["chosen"]),
            shift_used=int(data["shift_used"]),
        )
        return BarAnalysisMessage(bar_index=int(data["bar_index"]), result=result)
    if kind == "status":
        return StatusMessage(text=str(data["text"]))
    raise ValueError(f"unknown message type {kind!r}")
