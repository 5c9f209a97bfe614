"""Estimator-style wrappers so the pipeline composes with the scikit-learn
ecosystem: ``get_params``/``set_params`` follow the sklearn contract (and
``sklearn.clone`` works on them), without requiring scikit-learn itself.
"""

from __future__ import annotations

import inspect

import numpy as np

from .errors import EmptyInput
from .pipeline import (
    CLASS_ORDER,
    AverageTrajectory,
    BarSegment,
    CaptureSequence,
    MovementClass,
    average_bars,
    extract_bars,
)
from .registration import ClassificationResult, classify_extraneous


class ParamsMixin:
    """sklearn-compatible parameter handling driven by __init__'s signature."""

    @classmethod
    def _param_names(cls) -> list[str]:
        sig = inspect.signature(cls.__init__)
        return [name for name in sig.parameters if name != "self"]

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise ValueError(f"invalid parameter {key!r} for {type(self).__name__}")
            setattr(self, key, value)
        return self

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"


class BarExtractor(ParamsMixin):
    """Transformer: capture sequences -> downbeat-anchored fixed-length bars."""

    def __init__(self, n_points: int = 256, anchor: int | str = "auto"):
        self.n_points = n_points
        self.anchor = anchor

    def fit(self, X, y=None):
        return self

    def transform(self, X) -> list[BarSegment]:
        if isinstance(X, CaptureSequence):
            X = [X]
        bars: list[BarSegment] = []
        for seq in X:
            bars.extend(extract_bars(seq, n_points=self.n_points, anchor=self.anchor))
        return bars

    def fit_transform(self, X, y=None) -> list[BarSegment]:
        return self.fit(X, y).transform(X)


class MovementClassifier(ParamsMixin):
    """Nearest-average-trajectory classifier over rigid-registration deviation.

    fit() builds one point-to-point average per movement class; predict()
    registers each bar against every average and picks the lowest mean
    deviation.
    """

    def __init__(self, search_shifts: bool = True):
        self.search_shifts = search_shifts

    def fit(self, X, y) -> "MovementClassifier":
        bars = list(X)
        labels = [MovementClass.coerce(v) for v in y]
        if not bars:
            raise EmptyInput("fit requires at least one bar")
        if len(bars) != len(labels):
            raise ValueError(f"{len(bars)} bars but {len(labels)} labels")
        grouped: dict[MovementClass, list[BarSegment]] = {}
        for bar, label in zip(bars, labels):
            grouped.setdefault(label, []).append(bar)
        ordered = sorted(grouped, key=lambda m: CLASS_ORDER[m])
        self.references_ = {label: average_bars(grouped[label], label) for label in ordered}
        self.classes_ = np.array([label.value for label in ordered])
        return self

    def _check_fitted(self):
        if not hasattr(self, "references_"):
            raise ValueError("MovementClassifier is not fitted; call fit() first")

    @classmethod
    def from_references(cls, references, search_shifts: bool = True) -> "MovementClassifier":
        """Build a ready classifier from stored average trajectories."""
        self = cls(search_shifts=search_shifts)
        refs = sorted(references, key=lambda r: CLASS_ORDER[r.label])
        self.references_ = {r.label: r for r in refs}
        self.classes_ = np.array([r.label.value for r in refs])
        return self

    def classify(self, bar: BarSegment) -> ClassificationResult:
        self._check_fitted()
        return classify_extraneous(bar, list(self.references_.values()),
                                   search_shifts=self.search_shifts)

    def predict(self, X) -> np.ndarray:
        if isinstance(X, BarSegment):
            X = [X]
        return np.array([self.classify(bar).chosen.value for bar in X])

    def score(self, X, y) -> float:
        pred = self.predict(X)
        truth = np.array([MovementClass.coerce(v).value for v in y])
        return float(np.mean(pred == truth))

    @property
    def reference_list(self) -> list[AverageTrajectory]:
        self._check_fitted()
        return list(self.references_.values())
