"""LSG score and semi-period scan."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InsufficientDataError, InvalidPeriodError, InvalidRangeError
from .series import as_series

# Scores closer than this (relative to the series' peak-to-peak range) to the
# minimum count as ties; the smallest such period wins.
TIE_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class PeriodScan:
    t_min: int
    t_max: int
    scores: np.ndarray
    best_period: int

    def score(self, period: int) -> float:
        return float(self.scores[period - self.t_min])

    def items(self):
        for offset, value in enumerate(self.scores):
            yield self.t_min + offset, float(value)


def lsg_score(series, period: int) -> float:
    """Mean per-sample discrepancy between consecutive segments of length ``period``.

    Consecutive full segments are compared over all ``period`` samples; the
    trailing partial segment is compared over its own length against the last
    full segment and counts as ``L_rem / period`` of a pair.  The pair-weighted
    normalisation reduces to dividing the summed lag-``period`` differences by
    ``len - period``.
    """
    x = as_series(series).values
    if int(period) != period or period < 1:
        raise InvalidPeriodError(f"period must be a positive integer, got {period}")
    period = int(period)
    if x.size < 2 * period:
        raise InsufficientDataError(f"need at least {2 * period} samples for period {period}, got {x.size}")
    return float(np.abs(x[period:] - x[:-period]).sum() / (x.size - period))


def default_range(length: int) -> tuple[int, int]:
    return 2, length // 2


def scan_semi_period(series, t_min: int = 2, t_max: Optional[int] = None) -> PeriodScan:
    x = as_series(series).values
    if t_max is None:
        t_max = x.size // 2
    if t_min < 2 or t_max < t_min:
        raise InvalidRangeError(f"empty or invalid candidate range [{t_min}, {t_max}]")
    if t_max > x.size // 2:
        raise InvalidRangeError(f"t_max {t_max} exceeds half the series length {x.size}")
    periods = range(t_min, t_max + 1)
    scores = np.array([np.abs(x[p:] - x[:-p]).sum() / (x.size - p) for p in periods])
    tol = TIE_RTOL * float(np.ptp(x)) if x.size else 0.0
    best = t_min + int(np.flatnonzero(scores <= scores.min() + tol)[0])
    scores.setflags(write=False)
    return PeriodScan(t_min, t_max, scores, best)


def smooth3(x: np.ndarray) -> np.ndarray:
    """Centered 3-point moving average; the end points average their two available samples."""
    x = np.asarray(x, dtype=float)
    if x.size < 3:
        return x.copy()
    out = np.empty_like(x)
    out[1:-1] = (x[:-2] + x[1:-1] + x[2:]) / 3.0
    out[0] = (x[0] + x[1]) / 2.0
    out[-1] = (x[-2] + x[-1]) / 2.0
    return out


PERIOD_METHODS = ("lsg-raw", "lsg-smoothed")


def detect_period(values: np.ndarray, method: str, t_min: int = 2, t_max: Optional[int] = None) -> PeriodScan:
    if method == "lsg-raw":
        return scan_semi_period(values, t_min, t_max)
    if method == "lsg-smoothed":
        return scan_semi_period(smooth3(values), t_min, t_max)
    raise ValueError(f"unknown period method {method!r}")
