"""Flat ``key = value`` session configuration."""

from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import ValidationError


@dataclass
class Settings:
    tempo_bpm: float = 76.0
    beats_per_bar: int = 4
    n_points: int = 256
    baton_length_m: float = 0.35
    smoothing_width: int = 5
    tilt_gain: float = 0.02
    rate_hz: float = 100.0

    def __post_init__(self):
        if self.tempo_bpm <= 0:
            raise ValidationError("tempo_bpm must be positive")
        if self.beats_per_bar < 1:
            raise ValidationError("beats_per_bar must be >= 1")
        if self.n_points < self.beats_per_bar or self.n_points % self.beats_per_bar:
            raise ValidationError("n_points must be a positive multiple of beats_per_bar")
        if self.smoothing_width < 1:
            raise ValidationError("smoothing_width must be >= 1")
        if not 0.0 <= self.tilt_gain <= 1.0:
            raise ValidationError("tilt_gain must lie in [0, 1]")
        if not 20.0 <= self.rate_hz <= 500.0:
            raise ValidationError("rate_hz must lie in [20, 500]")


_FIELD_TYPES = {f.name: f.type for f in fields(Settings)}


def load_settings(path) -> Settings:
    values: dict = {}
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in _FIELD_TYPES:
                raise ValidationError(f"{path}:{lineno}: unknown setting {key!r}")
            caster = int if _FIELD_TYPES[key] in ("int", int) else float
            try:
                values[key] = caster(value)
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: bad value {value!r} for {key}") from None
    return Settings(**values)


def save_settings(settings: Settings, path) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        for f in fields(Settings):
            fh.write(f"{f.name} = {getattr(settings, f.name)!r}\n")
