"""Reference corpus conventions: fixed seed sets for building the shipped
reference averages (training) and for evaluating classification on unseen
bars, plus the demo bundle writer.

Training and evaluation draw from disjoint seed bases so evaluation bars are
never the ones averaged into the references.
"""

from __future__ import annotations

import os

from .geometry import Quaternion
from .live import calibrate_control
from .pipeline import (
    AverageTrajectory,
    BarSegment,
    MovementClass,
    average_bars,
    export_capture_csv,
    extract_bars,
    save_average,
)
from .session import save_control
from .synthetic import PerturbationSpec, generate_synthetic, static_imu_stream

TRAINING_SEED_BASE = 1000
EVALUATION_SEED_BASE = 2000
TRAIN_SEQUENCES_PER_CLASS = 5
EVAL_SEQUENCES_PER_CLASS = 13
BARS_PER_SEQUENCE = 4
DEMO_BAR_SEED = 4242

_CLASS_INDEX = {mc: i for i, mc in enumerate(MovementClass)}


def training_seeds(movement: MovementClass) -> list[int]:
    base = TRAINING_SEED_BASE + _CLASS_INDEX[movement] * 10
    return [base + s for s in range(TRAIN_SEQUENCES_PER_CLASS)]


def evaluation_seeds(movement: MovementClass) -> list[int]:
    base = EVALUATION_SEED_BASE + _CLASS_INDEX[movement] * 100
    return [base + s for s in range(EVAL_SEQUENCES_PER_CLASS)]


def training_bars(movement: MovementClass, *, n_points: int = 256) -> list[BarSegment]:
    bars: list[BarSegment] = []
    for seed in training_seeds(movement):
        seq = generate_synthetic(PerturbationSpec(movement, seed=seed),
                                 bars=BARS_PER_SEQUENCE)
        bars.extend(extract_bars(seq, n_points=n_points))
    return bars


def evaluation_bars(movement: MovementClass, *, limit: int = 50,
                    n_points: int = 256) -> list[BarSegment]:
    bars: list[BarSegment] = []
    for seed in evaluation_seeds(movement):
        if len(bars) >= limit:
            break
        seq = generate_synthetic(PerturbationSpec(movement, seed=seed),
                                 bars=BARS_PER_SEQUENCE)
        bars.extend(extract_bars(seq, n_points=n_points))
    return bars[:limit]


def build_references(*, n_points: int = 256) -> list[AverageTrajectory]:
    """One average per movement class from the training seed set (20 bars each)."""
    return [average_bars(training_bars(mc, n_points=n_points), mc) for mc in MovementClass]


def demo_bar_sequence():
    """The shipped demo capture: one bar conducted with knee movement."""
    return generate_synthetic(PerturbationSpec(MovementClass.KNEE, seed=DEMO_BAR_SEED), bars=1)


def build_demo(directory) -> None:
    """Write the demo bundle: reference averages, an unknown knee bar to
    classify, and a calibrated control frame."""
    refs_dir = os.path.join(directory, "references")
    os.makedirs(refs_dir, exist_ok=True)
    for avg in build_references():
        save_average(avg, os.path.join(refs_dir, f"{avg.label.value}.json"))
    export_capture_csv(demo_bar_sequence(), os.path.join(directory, "unknown_bar.csv"))
    control = calibrate_control(static_imu_stream(Quaternion.identity(), duration_s=5.0))
    save_control(control, os.path.join(directory, "control.json"))
