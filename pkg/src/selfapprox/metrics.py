"""Forecast accuracy metrics."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class MetricReport:
    smape: float
    nmse: Optional[float]  # None when the actual window has zero variance
    mse: float
    mae: float
    mape: Optional[float]  # None when every actual value is zero
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


def _pair(actual, predicted) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(getattr(actual, "values", actual), dtype=float).reshape(-1)
    p = np.asarray(getattr(predicted, "values", predicted), dtype=float).reshape(-1)
    if a.size != p.size:
        raise InvalidInputError(f"length mismatch: {a.size} actual vs {p.size} predicted")
    if a.size == 0:
        raise InvalidInputError("metrics need at least one sample")
    return a, p


def smape(actual, predicted) -> float:
    """Symmetric mean absolute percentage error, in percent, bounded by [0, 200].

    The denominator uses magnitudes so that mixed-sign data stays within the
    bound; for nonnegative data this is the plain ``(Y + F) / 2`` form.  A term
    whose actual and predicted values are both zero contributes 0.
    """
    a, p = _pair(actual, predicted)
    num = np.abs(p - a)
    den = (np.abs(p) + np.abs(a)) / 2.0
    terms = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return float(terms.mean() * 100.0)


def nmse(actual, predicted) -> Optional[float]:
    a, p = _pair(actual, predicted)
    var = float(np.sum((a - a.mean()) ** 2))
    if var == 0.0:
        return None
    return float(np.sum((p - a) ** 2) / var)


def error_metrics(actual, predicted) -> MetricReport:
    a, p = _pair(actual, predicted)
    err = p - a
    nonzero = a != 0
    mape = None
    if nonzero.any():
        with np.errstate(over="ignore"):
            mape = float(np.mean(np.abs(err[nonzero]) / np.abs(a[nonzero])) * 100.0)
    return MetricReport(
        smape=smape(a, p),
        nmse=nmse(a, p),
        mse=float(np.mean(err**2)),
        mae=float(np.mean(np.abs(err))),
        mape=mape,
        n=int(a.size),
    )
