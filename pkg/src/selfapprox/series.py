"""Sampled series, period partitioning and train/validation/test splitting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import AlignmentError, InsufficientDataError, InvalidInputError, InvalidPeriodError

MIN_TRAIN_LENGTH = 4


@dataclass(frozen=True, eq=False)
class Series:
    """Uniformly sampled real-valued sequence.

    ``start_index`` is the sample offset of ``values[0]`` on the global grid;
    ``labels`` carries the original timestamps untouched, for output only.
    """

    values: np.ndarray
    start_index: int = 0
    labels: Optional[tuple] = None

    def __post_init__(self):
        arr = np.array(self.values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("series values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "start_index", int(self.start_index))
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != arr.size:
                raise InvalidInputError("labels must match the number of values")
            object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return int(self.values.size)

    def __getitem__(self, item: slice) -> "Series":
        if not isinstance(item, slice):
            return self.values[item]
        start, stop, step = item.indices(len(self))
        if step != 1:
            raise InvalidInputError("series slices must be contiguous")
        labels = self.labels[start:stop] if self.labels is not None else None
        return Series(self.values[start:stop], self.start_index + start, labels)

    @property
    def end_index(self) -> int:
        """One past the global index of the last sample."""
        return self.start_index + len(self)

    def with_values(self, values) -> "Series":
        return Series(values, self.start_index, self.labels)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Series):
            return NotImplemented
        return (
            self.start_index == other.start_index
            and self.labels == other.labels
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


def as_series(data) -> Series:
    return data if isinstance(data, Series) else Series(data)


@dataclass(frozen=True, eq=False)
class SegmentSet:
    """A series cut into ``n`` full segments of length ``period`` plus a remainder."""

    period: int
    full_segments: list = field(default_factory=list)
    remainder: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def n(self) -> int:
        return len(self.full_segments)

    def segments(self) -> list:
        """Full segments followed by the remainder when it is non-empty."""
        if self.remainder.size:
            return [*self.full_segments, self.remainder]
        return list(self.full_segments)

    def concatenate(self) -> np.ndarray:
        return np.concatenate([*self.full_segments, self.remainder])


@dataclass(frozen=True)
class SplitSpec:
    validation_ratio: float
    test_length: int = 0

    def __post_init__(self):
        if not 0.0 < self.validation_ratio < 1.0:
            raise InvalidInputError(f"validation_ratio must lie in (0, 1), got {self.validation_ratio}")
        if self.test_length < 0:
            raise InvalidInputError("test_length must be nonnegative")


def partition(series, period: int) -> SegmentSet:
    values = as_series(series).values
    if int(period) != period or period < 1 or period > values.size:
        raise InvalidPeriodError(f"period must be in [1, {values.size}], got {period}")
    period = int(period)
    n = values.size // period
    full = [values[i * period:(i + 1) * period] for i in range(n)]
    return SegmentSet(period, full, values[n * period:])


def validation_length(pre_test_length: int, ratio: float) -> int:
    # round() guards against ceil(0.2 * 90) landing on 19 through float noise
    return int(math.ceil(round(ratio * pre_test_length, 9)))


def split(series, spec: SplitSpec) -> tuple[Series, Series, Series]:
    """Cut ``series`` into chronologically ordered train, validation and test parts.

    The test window is the last ``spec.test_length`` samples; validation is the
    latest ``ceil(ratio * remaining)`` samples before it.
    """
    s = as_series(series)
    total = len(s)
    if spec.test_length >= total:
        raise InsufficientDataError(f"test_length {spec.test_length} leaves no data out of {total}")
    pre = total - spec.test_length
    n_val = validation_length(pre, spec.validation_ratio)
    n_train = pre - n_val
    if n_train < MIN_TRAIN_LENGTH:
        raise InsufficientDataError(
            f"train part would hold {n_train} samples, need at least {MIN_TRAIN_LENGTH}"
        )
    return s[:n_train], s[n_train:pre], s[pre:]


def _check_aligned(a: Series, b: Series) -> None:
    if len(a) != len(b) or a.start_index != b.start_index:
        raise AlignmentError(
            f"series are not aligned: len {len(a)}@{a.start_index} vs len {len(b)}@{b.start_index}"
        )


def subtract(a, b) -> Series:
    a, b = as_series(a), as_series(b)
    _check_aligned(a, b)
    return Series(a.values - b.values, a.start_index, a.labels)


def add(a, b) -> Series:
    a, b = as_series(a), as_series(b)
    _check_aligned(a, b)
    return Series(a.values + b.values, a.start_index, a.labels)


def concat(parts: Sequence[Series]) -> Series:
    if not parts:
        return Series(np.empty(0))
    labels = None
    if all(p.labels is not None for p in parts):
        labels = sum((p.labels for p in parts), ())
    return Series(np.concatenate([p.values for p in parts]), parts[0].start_index, labels)
