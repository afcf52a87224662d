"""Weighted segment averaging into a basic element, and tiling it back out."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .series import SegmentSet, Series

WEIGHTINGS = ("uniform", "linear-recency", "exponential-recency")
DEFAULT_ALPHA = 0.9


@dataclass(frozen=True)
class WeightingStrategy:
    """Per-segment weights; segment ``i`` is 1-based and the remainder is ``n + 1``."""

    kind: str = "uniform"
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if self.kind not in WEIGHTINGS:
            raise InvalidInputError(f"unknown weighting {self.kind!r}; expected one of {WEIGHTINGS}")
        if self.kind == "exponential-recency" and not 0.0 < self.alpha < 1.0:
            raise InvalidInputError(f"alpha must lie in (0, 1), got {self.alpha}")

    def weights(self, n: int, count: int) -> np.ndarray:
        """Weights for segments ``1..count`` of a set with ``n`` full segments."""
        idx = np.arange(1, count + 1, dtype=float)
        if self.kind == "uniform":
            return np.ones(count)
        if self.kind == "linear-recency":
            return idx
        return self.alpha ** (n - idx)


@dataclass(frozen=True, eq=False)
class BasicElement:
    values: np.ndarray
    period: int
    contributing_counts: np.ndarray

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "values": [float(v) for v in self.values],
            "contributing_counts": [int(c) for c in self.contributing_counts],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BasicElement":
        values = np.array(data["values"], dtype=float)
        counts = np.array(data["contributing_counts"], dtype=int)
        if values.size != int(data["period"]):
            raise InvalidInputError("basic element length does not match its period")
        return cls(values, int(data["period"]), counts)


def build_basic_element(segments: SegmentSet, strategy: WeightingStrategy = WeightingStrategy()) -> BasicElement:
    if segments.n < 1:
        raise InvalidInputError("need at least one full segment")
    period = segments.period
    parts = segments.segments()
    w = strategy.weights(segments.n, len(parts))
    total = np.zeros(period)
    norm = np.zeros(period)
    counts = np.zeros(period, dtype=int)
    for weight, seg in zip(w, parts):
        k = seg.size
        total[:k] += weight * seg
        norm[:k] += weight
        counts[:k] += 1
    values = total / norm
    values.setflags(write=False)
    counts.setflags(write=False)
    return BasicElement(values, period, counts)


def tile(element: BasicElement, length: int, start_phase: int = 0, start_index: int = 0) -> Series:
    if length < 0:
        raise InvalidInputError("length must be nonnegative")
    if not 0 <= start_phase < element.period:
        raise InvalidInputError(f"start_phase must lie in [0, {element.period})")
    idx = (start_phase + np.arange(length)) % element.period
    return Series(element.values[idx], start_index)
