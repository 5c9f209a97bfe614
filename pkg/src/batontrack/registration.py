"""Rigid registration of bars onto reference trajectories and the
lowest-deviation extraneous-movement classifier.

Correspondences are index-wise: both curves carry the same fixed point count
and downbeat anchor, so point i of one maps to point i of the other. The
alignment itself is the closed-form least-squares fit (centroids,
cross-covariance, SVD with reflection guard). Rotation + translation only;
no scaling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometry, NoReferences, ShapeMismatch
from .pipeline import (
    CLASS_ORDER,
    AverageTrajectory,
    BarSegment,
    MovementClass,
    beat_slices,
)


@dataclass(frozen=True)
class RigidTransform:
    """Proper rotation plus translation, meters."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float)
        t = np.asarray(self.translation, dtype=float)
        if r.shape != (3, 3) or t.shape != (3,):
            raise ValueError("rigid transform needs a (3, 3) rotation and (3,) translation")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation.T + self.translation


@dataclass(frozen=True)
class DeviationProfile:
    """Point-to-point distances plus their aggregates."""

    per_point: np.ndarray
    mean_m: float
    max_m: float
    per_beat_mean_m: np.ndarray


@dataclass(frozen=True)
class RankedMatch:
    """Deviation of one bar against one reference class."""

    label: MovementClass
    mean_m: float
    max_m: float
    per_beat_mean_m: np.ndarray
    shift: int

    def to_dict(self) -> dict:
        return {
            "label": self.label.value,
            "mean_m": self.mean_m,
            "max_m": self.max_m,
            "per_beat_m": [float(v) for v in self.per_beat_mean_m],
        }


@dataclass(frozen=True)
class ClassificationResult:
    """Per-class deviations ranked ascending; first entry wins."""

    ranking: list[RankedMatch]
    chosen: MovementClass
    shift_used: int

    def to_dict(self, bar_id: str | int | None = None) -> dict:
        data = {
            "bar_id": bar_id,
            "ranking": [m.to_dict() for m in self.ranking],
            "chosen": self.chosen.value,
            "shift_used": self.shift_used,
        }
        if bar_id is None:
            del data["bar_id"]
        return data


def _as_points(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ShapeMismatch(f"{name} must be (n, 3), got {arr.shape}")
    return arr


def rigid_register(source, target) -> tuple[RigidTransform, np.ndarray, float]:
    """Least-squares rigid alignment of source onto target (index-matched).

    Returns (transform, transformed source, rmsd in meters).
    """
    src = _as_points(source, "source")
    tgt = _as_points(target, "target")
    if src.shape != tgt.shape:
        raise ShapeMismatch(f"source {src.shape} and target {tgt.shape} differ")
    if src.shape[0] < 3:
        raise ShapeMismatch(f"need at least 3 points, got {src.shape[0]}")

    centroid_src = src.mean(axis=0)
    centroid_tgt = tgt.mean(axis=0)
    h = (src - centroid_src).T @ (tgt - centroid_tgt)
    u, s, vt = np.linalg.svd(h)
    if s[0] <= 0.0 or s[1] <= 1e-12 * s[0]:
        raise DegenerateGeometry(
            "centered configuration has rank < 2; rotation is not unique"
        )
    d = np.sign(np.linalg.det(vt.T @ u.T))
    rotation = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    translation = centroid_tgt - rotation @ centroid_src
    transform = RigidTransform(rotation, translation)
    aligned = transform.apply(src)
    rmsd = float(np.sqrt(np.mean(np.sum((aligned - tgt) ** 2, axis=1))))
    return transform, aligned, rmsd


def pointwise_deviation(aligned, target, beats_per_bar: int) -> DeviationProfile:
    """Euclidean distance at each index plus mean/max/per-beat aggregates."""
    a = _as_points(aligned, "aligned")
    t = _as_points(target, "target")
    if a.shape != t.shape:
        raise ShapeMismatch(f"aligned {a.shape} and target {t.shape} differ")
    per_point = np.linalg.norm(a - t, axis=1)
    slices = beat_slices(a.shape[0], beats_per_bar)
    per_beat = np.array([float(np.mean(per_point[r.start:r.stop])) for r in slices])
    return DeviationProfile(
        per_point=per_point,
        mean_m=float(np.mean(per_point)),
        max_m=float(np.max(per_point)),
        per_beat_mean_m=per_beat,
    )


def compare_to_reference(bar: BarSegment, ref: AverageTrajectory, *,
                         search_shifts: bool = True
                         ) -> tuple[RigidTransform, DeviationProfile, int]:
    """Register the bar onto a reference, trying each beat-aligned circular
    shift of the bar and keeping the lowest mean deviation.

    The shift search guards against downbeat misdetection; pass
    ``search_shifts=False`` when the bar's anchor is trusted.
    """
    if bar.n != ref.n or bar.beats_per_bar != ref.beats_per_bar:
        raise ShapeMismatch(
            f"bar (n={bar.n}, beats={bar.beats_per_bar}) does not match "
            f"reference (n={ref.n}, beats={ref.beats_per_bar})"
        )
    width = bar.n // bar.beats_per_bar
    shifts = range(bar.beats_per_bar) if search_shifts else range(1)
    best: tuple[RigidTransform, DeviationProfile, int] | None = None
    for j in shifts:
        candidate = np.roll(bar.points, -j * width, axis=0)
        transform, aligned, _ = rigid_register(candidate, ref.points)
        profile = pointwise_deviation(aligned, ref.points, bar.beats_per_bar)
        if best is None or profile.mean_m < best[1].mean_m:
            best = (transform, profile, j)
    assert best is not None
    return best


def classify_extraneous(bar: BarSegment, references, *,
                        search_shifts: bool = True) -> ClassificationResult:
    """Register the bar against every reference; lowest mean deviation wins.

    Ties break toward the class enumeration order (control first).
    """
    refs = list(references)
    if not refs:
        raise NoReferences("classification requires at least one reference trajectory")
    labels = [r.label for r in refs]
    if len(set(labels)) != len(labels):
        raise ValueError("reference labels must be unique")

    matches = []
    for ref in refs:
        _, profile, shift = compare_to_reference(bar, ref, search_shifts=search_shifts)
        matches.append(
            RankedMatch(
                label=ref.label,
                mean_m=profile.mean_m,
                max_m=profile.max_m,
                per_beat_mean_m=profile.per_beat_mean_m,
                shift=shift,
            )
        )
    matches.sort(key=lambda m: (m.mean_m, CLASS_ORDER[m.label]))
    return ClassificationResult(ranking=matches, chosen=matches[0].label,
                                shift_used=matches[0].shift)
