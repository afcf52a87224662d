"""Polynomial trends and fractional-degree geometric blends between them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.polynomial import Chebyshev, Polynomial

from .errors import InsufficientDataError, InvalidInputError, SignDomainError, SingularFitError
from .series import Series, as_series

MAX_DEGREE = 10
FRACTIONAL_N = 10


@dataclass(frozen=True, eq=False)
class TrendModel:
    """Least-squares polynomial, or a geometric blend of two consecutive-degree fits.

    Integer fits are stored as Chebyshev coefficients in the scaled abscissa
    ``u = (x - center) / half_width``, where ``x`` counts samples from
    ``domain_offset``.  The fitting window maps onto ``[-1, 1]``.
    """

    kind: str
    coefficients: Optional[np.ndarray] = None
    domain_offset: int = 0
    center: float = 0.0
    half_width: float = 1.0
    lower: Optional["TrendModel"] = None
    upper: Optional["TrendModel"] = None
    blend_index: int = 0
    subdivisions: int = 1

    @property
    def degree(self) -> float:
        if self.kind == "integer":
            return len(self.coefficients) - 1
        # i = N is the lower fit, i = 0 the upper one
        return self.lower.degree + (self.subdivisions - self.blend_index) / self.subdivisions

    def descriptor(self) -> dict:
        if self.kind == "integer":
            return {"kind": "integer", "degree": self.degree}
        return {
            "kind": "fractional",
            "m": self.lower.degree,
            "i": self.blend_index,
            "N": self.subdivisions,
        }

    def raw_coefficients(self) -> np.ndarray:
        """Ascending power-basis coefficients in ``x`` (integer fits only)."""
        if self.kind != "integer":
            raise InvalidInputError("fractional blends have no polynomial coefficients")
        lo = self.center - self.half_width
        hi = self.center + self.half_width
        cheb = Chebyshev(self.coefficients, domain=[lo, hi])
        coef = cheb.convert(kind=Polynomial).coef
        return np.pad(coef, (0, len(self.coefficients) - len(coef)))

    def to_dict(self) -> dict:
        if self.kind == "integer":
            return {
                "kind": "integer",
                "coefficients": [float(c) for c in self.coefficients],
                "domain_offset": self.domain_offset,
                "center": self.center,
                "half_width": self.half_width,
            }
        return {
            "kind": "fractional",
            "blend_index": self.blend_index,
            "subdivisions": self.subdivisions,
            "lower": self.lower.to_dict(),
            "upper": self.upper.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrendModel":
        if data["kind"] == "integer":
            coef = np.array(data["coefficients"], dtype=float)
            coef.setflags(write=False)
            return cls(
                "integer",
                coef,
                int(data["domain_offset"]),
                float(data["center"]),
                float(data["half_width"]),
            )
        return fractional_blend(
            cls.from_dict(data["lower"]),
            cls.from_dict(data["upper"]),
            int(data["blend_index"]),
            int(data["subdivisions"]),
        )


@dataclass(frozen=True, eq=False)
class DetrendResult:
    trend_values: Series
    residual: Series


def fit_polynomial(series, degree: int, max_degree: Optional[int] = MAX_DEGREE) -> TrendModel:
    """Least-squares polynomial of ``degree`` over ``x = 0 .. len-1``.

    ``max_degree=None`` lifts the degree cap (used by guaranteed mode).
    """
    s = as_series(series)
    y = s.values
    if degree < 0 or int(degree) != degree:
        raise InvalidInputError(f"degree must be a nonnegative integer, got {degree}")
    degree = int(degree)
    if max_degree is not None and degree > max_degree:
        raise InvalidInputError(f"degree {degree} exceeds max_degree {max_degree}")
    if y.size < degree + 1:
        raise InsufficientDataError(f"degree {degree} needs at least {degree + 1} samples, got {y.size}")
    center = (y.size - 1) / 2.0
    half_width = center if y.size > 1 else 1.0
    u = (np.arange(y.size) - center) / half_width
    vander = C.chebvander(u, degree)
    coef, _, rank, _ = np.linalg.lstsq(vander, y, rcond=None)
    if rank < degree + 1:
        raise SingularFitError(f"degree {degree} fit is rank deficient (rank {rank})")
    coef.setflags(write=False)
    return TrendModel("integer", coef, s.start_index, center, half_width)


def _evaluate_integer(model: TrendModel, at: np.ndarray) -> np.ndarray:
    u = (at - model.domain_offset - model.center) / model.half_width
    return C.chebval(u, model.coefficients)


def _blend_values(lower: np.ndarray, upper: np.ndarray, i: int, n: int) -> np.ndarray:
    sign = np.sign(lower)
    if np.any(sign == 0) or np.any(sign != np.sign(upper)):
        raise SignDomainError("fractional blend needs both fits strictly of one sign at every sample")
    if i == n:
        return lower.copy()
    if i == 0:
        return upper.copy()
    return sign * np.power(np.abs(lower), i / n) * np.power(np.abs(upper), (n - i) / n)


def evaluate_trend(model: TrendModel, at) -> Series:
    """Sample the trend at the global sample indices ``at`` (a range or int array)."""
    idx = np.asarray(at, dtype=np.int64).reshape(-1)
    start = int(idx[0]) if idx.size else 0
    if model.kind == "integer":
        values = _evaluate_integer(model, idx.astype(float))
    else:
        lo = evaluate_trend(model.lower, idx).values
        hi = evaluate_trend(model.upper, idx).values
        values = _blend_values(lo, hi, model.blend_index, model.subdivisions)
    return Series(values, start)


def fractional_blend(lower: TrendModel, upper: TrendModel, i: int, n: int) -> TrendModel:
    """Geometric blend ``(f_m^i * f_{m+1}^(n-i))^(1/n)``, sign-extended.

    Domain violations surface when the blend is evaluated.
    """
    if lower.kind != "integer" or upper.kind != "integer":
        raise InvalidInputError("blends are built from integer-degree fits")
    if upper.degree != lower.degree + 1:
        raise InvalidInputError(
            f"upper degree must be lower degree + 1, got {lower.degree} and {upper.degree}"
        )
    if n < 1 or not 0 <= i <= n:
        raise InvalidInputError(f"need 0 <= i <= N and N >= 1, got i={i}, N={n}")
    return TrendModel(
        "fractional",
        domain_offset=lower.domain_offset,
        lower=lower,
        upper=upper,
        blend_index=int(i),
        subdivisions=int(n),
    )


def detrend(series, model: TrendModel) -> DetrendResult:
    s = as_series(series)
    trend = evaluate_trend(model, np.arange(s.start_index, s.end_index))
    trend = Series(trend.values, s.start_index, s.labels)
    return DetrendResult(trend, Series(s.values - trend.values, s.start_index, s.labels))
