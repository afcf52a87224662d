"""Rolling-origin comparison against the repeat-last-period naive forecast."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InsufficientDataError
from .forecaster import FitOptions, fit, predict
from .metrics import smape
from .series import as_series


def seasonal_naive(history: np.ndarray, horizon: int, period: int) -> np.ndarray:
    """Repeat the last ``period`` samples of ``history`` over ``horizon``."""
    history = np.asarray(history, dtype=float)
    if period < 1 or history.size < period:
        raise InsufficientDataError(f"need at least {period} samples of history")
    last = history[-period:]
    return last[np.arange(horizon) % period]


@dataclass(frozen=True)
class WindowResult:
    start: int
    end: int
    model_smape: float
    naive_smape: float

    @property
    def model_wins(self) -> bool:
        return self.model_smape < self.naive_smape


def rolling_backtest(series, windows: int, test_length: int, naive_period: int, options: FitOptions = FitOptions()):
    """Fit on everything before each of ``windows`` contiguous trailing test windows.

    Window ``k`` covers ``[n - (windows - k) * test_length, n - (windows - k - 1) * test_length)``.
    """
    values = as_series(series).values
    n = values.size
    results = []
    for k in range(windows):
        end = n - (windows - 1 - k) * test_length
        start = end - test_length
        if start <= 0:
            raise InsufficientDataError("series too short for the requested windows")
        model = fit(values[:end], replace(options, test_length=test_length))
        forecast = predict(model, test_length).values
        naive = seasonal_naive(values[:start], test_length, naive_period)
        actual = values[start:end]
        results.append(WindowResult(start, end, smape(actual, forecast), smape(actual, naive)))
    return results

