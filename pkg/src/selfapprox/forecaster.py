"""Iterative self-approximation forecaster.

Each iteration de-trends the current residual with a polynomial (or a
fractional blend of two), finds its semi-period, averages the segments into a
basic element and tiles it.  The trend plus the tiled element is the
iteration's component; it is added to the running prediction and subtracted
from the residual.  Every candidate configuration is scored by SMAPE of the
cumulative prediction on a validation window shared by all candidates.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .basic_element import DEFAULT_ALPHA, WEIGHTINGS, BasicElement, WeightingStrategy, build_basic_element
from .detrend import (
    FRACTIONAL_N,
    MAX_DEGREE,
    TrendModel,
    evaluate_trend,
    fit_polynomial,
    fractional_blend,
)
from .errors import (
    GuaranteeUnreachableError,
    InsufficientDataError,
    InvalidInputError,
    IterationFailed,
    SelfApproxError,
    SignDomainError,
    SingularFitError,
)
from .metrics import MetricReport, error_metrics, smape
from .period import PERIOD_METHODS, detect_period
from .series import Series, as_series, partition, validation_length

log = logging.getLogger(__name__)

MIN_FIT_LENGTH = 16
MIN_CANDIDATE_LENGTH = 8
# A residual this small relative to the input is treated as exactly zero.
ZERO_RTOL = 1e-12


@dataclass(frozen=True)
class FitOptions:
    max_iterations: int = 10
    validation_ratios: tuple = (0.10, 0.15, 0.20, 0.25)
    max_degree: int = MAX_DEGREE
    fractional_n: int = FRACTIONAL_N
    test_length: int = 0
    period_methods: tuple = PERIOD_METHODS
    weightings: tuple = WEIGHTINGS
    alpha: float = DEFAULT_ALPHA
    t_min: int = 2
    t_max: Optional[int] = None
    n_jobs: int = 1
    random_seed: int = 0  # reserved, the pipeline is deterministic

    def __post_init__(self):
        object.__setattr__(self, "validation_ratios", tuple(float(r) for r in self.validation_ratios))
        object.__setattr__(self, "period_methods", tuple(self.period_methods))
        object.__setattr__(self, "weightings", tuple(self.weightings))
        if self.max_iterations < 1:
            raise InvalidInputError("max_iterations must be positive")
        if not (self.validation_ratios and self.period_methods and self.weightings):
            raise InvalidInputError("every configuration grid must be nonempty")
        if any(not 0.0 < r < 1.0 for r in self.validation_ratios):
            raise InvalidInputError("validation ratios must lie in (0, 1)")
        if any(m not in PERIOD_METHODS for m in self.period_methods):
            raise InvalidInputError(f"period methods must be drawn from {PERIOD_METHODS}")
        for kind in self.weightings:
            WeightingStrategy(kind, self.alpha)
        if self.max_degree < 0 or self.fractional_n < 1:
            raise InvalidInputError("max_degree must be >= 0 and fractional_n >= 1")
        if self.test_length < 0:
            raise InvalidInputError("test_length must be nonnegative")
        if self.t_min < 2:
            raise InvalidInputError("t_min must be at least 2")

    def to_dict(self) -> dict:
        return {
            "max_iterations": self.max_iterations,
            "validation_ratios": list(self.validation_ratios),
            "max_degree": self.max_degree,
            "fractional_n": self.fractional_n,
            "test_length": self.test_length,
            "period_methods": list(self.period_methods),
            "weightings": list(self.weightings),
            "alpha": self.alpha,
            "t_min": self.t_min,
            "t_max": self.t_max,
            "random_seed": self.random_seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FitOptions":
        return cls(**{k: (tuple(v) if isinstance(v, list) else v) for k, v in data.items()})


@dataclass(frozen=True)
class Configuration:
    """One point of the search grid.

    ``trend`` is ``("integer", degree)`` or ``("fractional", m, i, N)``.
    ``validation_ratio`` is None only for the full-range fits of guaranteed mode.
    """

    validation_ratio: Optional[float]
    period_method: str
    weighting: str
    trend: tuple

    def to_dict(self) -> dict:
        trend = {"kind": self.trend[0]}
        if self.trend[0] == "integer":
            trend["degree"] = self.trend[1]
        else:
            trend.update(m=self.trend[1], i=self.trend[2], N=self.trend[3])
        return {
            "validation_ratio": self.validation_ratio,
            "period_method": self.period_method,
            "weighting": self.weighting,
            "trend": trend,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Configuration":
        t = data["trend"]
        trend = ("integer", t["degree"]) if t["kind"] == "integer" else ("fractional", t["m"], t["i"], t["N"])
        return cls(data["validation_ratio"], data["period_method"], data["weighting"], trend)


@dataclass(frozen=True, eq=False)
class IterationResult:
    config: Configuration
    trend: TrendModel
    trend_values: Series
    semi_period: int
    basic_element: BasicElement
    periodic_estimate: Series
    validation_smape: float
    train_length: int
    phase_origin: int

    @property
    def component(self) -> np.ndarray:
        return self.trend_values.values + self.periodic_estimate.values

    def summary(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "semi_period": self.semi_period,
            "validation_smape": self.validation_smape,
            "train_length": self.train_length,
        }


@dataclass(eq=False)
class Model:
    """A fitted decomposition: accepted iterations plus the fit-time report."""

    options: FitOptions
    span: tuple  # global [start, end) of the samples the model was fitted on
    iterations: list
    common_window: int
    stop_reason: str
    actual: Optional[Series] = None  # absent for models restored from a manifest
    fitted: Optional[Series] = None
    residual: Optional[Series] = None
    guaranteed: bool = False
    guarantee_unreachable: bool = False
    residual_norms: list = field(default_factory=list)
    test: Optional[Series] = None
    metrics: dict = field(default_factory=dict)
    iteration_metrics: list = field(default_factory=list)
    trend_fallbacks: list = field(default_factory=list)

    @property
    def end_index(self) -> int:
        return self.span[1]

    @property
    def semi_periods(self) -> list:
        return [it.semi_period for it in self.iterations]

    def components(self) -> list:
        return [it.component for it in self.iterations]


class _Workspace:
    """Caches trend fits and period scans shared between candidates of one iteration."""

    def __init__(self, residual: Series, prior: np.ndarray, actual: np.ndarray, window: int, options: FitOptions):
        self.residual = residual
        self.prior = prior
        self.actual = actual
        self.window = window
        self.options = options
        self.grid = np.arange(residual.start_index, residual.end_index)
        self._fits = {}
        self._trends = {}
        self._scans = {}

    def train_length(self, ratio: Optional[float]) -> int:
        m = len(self.residual)
        n_train = m if ratio is None else m - validation_length(m, ratio)
        if n_train < 4:
            raise InsufficientDataError(f"train part of {n_train} samples is too short")
        return n_train

    def integer_fit(self, ratio: Optional[float], degree: int) -> TrendModel:
        key = (ratio, degree)
        if key not in self._fits:
            try:
                n_train = self.train_length(ratio)
                max_degree = self.options.max_degree if ratio is not None else None
                self._fits[key] = fit_polynomial(self.residual[:n_train], degree, max_degree)
            except SelfApproxError as exc:
                self._fits[key] = exc
        fit = self._fits[key]
        if isinstance(fit, Exception):
            raise fit
        return fit

    def trend(self, ratio: Optional[float], spec: tuple) -> tuple[TrendModel, np.ndarray]:
        key = (ratio, spec)
        if key not in self._trends:
            try:
                if spec[0] == "integer":
                    model = self.integer_fit(ratio, spec[1])
                else:
                    _, m, i, n = spec
                    model = fractional_blend(self.integer_fit(ratio, m), self.integer_fit(ratio, m + 1), i, n)
                self._trends[key] = (model, evaluate_trend(model, self.grid).values)
            except SelfApproxError as exc:
                self._trends[key] = exc
        hit = self._trends[key]
        if isinstance(hit, Exception):
            raise hit
        return hit

    def scan(self, ratio: Optional[float], spec: tuple, method: str):
        key = (ratio, spec, method)
        if key not in self._scans:
            try:
                n_train = self.train_length(ratio)
                _, reg = self.trend(ratio, spec)
                detrended = self.residual.values[:n_train] - reg[:n_train]
                t_max = n_train // 2 if self.options.t_max is None else min(self.options.t_max, n_train // 2)
                self._scans[key] = (detrended, detect_period(detrended, method, self.options.t_min, t_max))
            except SelfApproxError as exc:
                self._scans[key] = exc
        hit = self._scans[key]
        if isinstance(hit, Exception):
            raise hit
        return hit

    def evaluate(self, config: Configuration) -> IterationResult:
        model, reg = self.trend(config.validation_ratio, config.trend)
        detrended, scan = self.scan(config.validation_ratio, config.trend, config.period_method)
        period = scan.best_period
        element = build_basic_element(
            partition(detrended, period), WeightingStrategy(config.weighting, self.options.alpha)
        )
        periodic = element.values[np.arange(len(self.residual)) % period]
        prediction = self.prior + reg + periodic
        w = self.window
        score = smape(self.actual[-w:], prediction[-w:])
        start = self.residual.start_index
        return IterationResult(
            config=config,
            trend=model,
            trend_values=Series(reg, start),
            semi_period=period,
            basic_element=element,
            periodic_estimate=Series(periodic, start),
            validation_smape=score,
            train_length=detrended.size,
            phase_origin=start,
        )

    def try_evaluate(self, config: Configuration) -> Optional[IterationResult]:
        try:
            return self.evaluate(config)
        except SelfApproxError as exc:
            log.debug("candidate %s infeasible: %s", config, exc)
            return None


def run_candidate(
    residual,
    config: Configuration,
    prior=None,
    actual=None,
    window: Optional[int] = None,
    options: FitOptions = FitOptions(),
) -> IterationResult:
    """Evaluate one configuration on ``residual``.

    ``prior`` is the prediction accumulated by earlier iterations (zeros by
    default), ``actual`` the original series the cumulative prediction is
    scored against (``residual`` by default), and ``window`` the number of
    trailing samples scored (the configuration's own validation length by
    default).  Raises when the candidate is infeasible.
    """
    r = as_series(residual)
    if len(r) < MIN_CANDIDATE_LENGTH:
        raise InsufficientDataError(f"candidate needs at least {MIN_CANDIDATE_LENGTH} samples")
    prior = np.zeros(len(r)) if prior is None else np.asarray(getattr(prior, "values", prior), dtype=float)
    actual = r.values if actual is None else np.asarray(getattr(actual, "values", actual), dtype=float)
    if window is None:
        ratio = config.validation_ratio
        window = len(r) if ratio is None else validation_length(len(r), ratio)
    return _Workspace(r, prior, actual, window, options).evaluate(config)


def select_configuration(candidates: list) -> IterationResult:
    """Lowest validation SMAPE; exact ties go to the earliest candidate."""
    feasible = [c for c in candidates if c is not None]
    if not feasible:
        raise IterationFailed("no feasible candidate configuration")
    best = feasible[0]
    for cand in feasible[1:]:
        if cand.validation_smape < best.validation_smape:
            best = cand
    return best


def integer_grid(options: FitOptions) -> list:
    return [
        Configuration(ratio, method, weighting, ("integer", degree))
        for ratio in options.validation_ratios
        for method in options.period_methods
        for weighting in options.weightings
        for degree in range(options.max_degree + 1)
    ]


def fractional_grid(best: Configuration, options: FitOptions) -> list:
    """Blends bracketing the best integer degree: pairs (m-1, m) and (m, m+1)."""
    m = best.trend[1]
    n = options.fractional_n
    pairs = [(lo, lo + 1) for lo in (m - 1, m) if lo >= 0 and lo + 1 <= options.max_degree]
    return [
        replace(best, trend=("fractional", lo, i, n))
        for lo, _ in pairs
        for i in range(1, n)
    ]


def _evaluate_all(ws: _Workspace, configs: list, n_jobs: int) -> list:
    if n_jobs <= 1 or len(configs) < 2:
        return [ws.try_evaluate(c) for c in configs]
    # warm the shared caches serially so workers only read them
    for c in configs:
        try:
            ws.scan(c.validation_ratio, c.trend, c.period_method)
        except SelfApproxError:
            pass
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(ws.try_evaluate, configs))


def _common_window(length: int, options: FitOptions) -> int:
    return min(validation_length(length, r) for r in options.validation_ratios)


def _search(ws: _Workspace, options: FitOptions, admissible=None) -> Optional[IterationResult]:
    """Integer-degree grid, then fractional refinement around the best degree."""
    keep = admissible or (lambda c: True)
    integer = [c for c in _evaluate_all(ws, integer_grid(options), options.n_jobs) if c is not None and keep(c)]
    if not integer:
        return None
    best = select_configuration(integer)
    frac = _evaluate_all(ws, fractional_grid(best.config, options), options.n_jobs)
    frac = [c for c in frac if c is not None and keep(c)]
    return select_configuration([best, *frac])


def _prepare(series, options: FitOptions) -> tuple[Series, Optional[Series]]:
    s = as_series(series)
    if options.test_length >= len(s):
        raise InsufficientDataError("test window covers the whole series")
    pre_len = len(s) - options.test_length
    if pre_len < MIN_FIT_LENGTH:
        raise InsufficientDataError(
            f"need at least {MIN_FIT_LENGTH} samples before the test window, got {pre_len}"
        )
    test = s[pre_len:] if options.test_length else None
    return s[:pre_len], test


def fit(series, options: FitOptions = FitOptions()) -> Model:
    """Run the iterative decomposition on everything before the test window.

    Stops after ``max_iterations``, when an iteration's best validation SMAPE
    does not improve on the previous one (that iteration is discarded), or
    when no candidate is feasible.  The test window is only used for the
    final report.
    """
    pre, test = _prepare(series, options)
    actual = pre.values
    residual = pre
    prior = np.zeros(len(pre))
    window = _common_window(len(pre), options)
    iterations = []
    previous = math.inf
    stop = "max-iterations"
    for k in range(options.max_iterations):
        ws = _Workspace(residual, prior, actual, window, options)
        best = _search(ws, options)
        if best is None:
            stop = "iteration-failed"
            break
        if best.validation_smape >= previous:
            stop = "no-improvement"
            break
        log.info("iteration %d: T*=%d smape=%.6g %s", k + 1, best.semi_period, best.validation_smape, best.config)
        iterations.append(best)
        previous = best.validation_smape
        prior = prior + best.component
        residual = residual.with_values(residual.values - best.component)
    model = Model(
        options, (pre.start_index, pre.end_index), iterations, window, stop,
        actual=pre, fitted=pre.with_values(prior), residual=residual,
    )
    _report(model, test)
    return model


def fit_guaranteed(series, options: FitOptions = FitOptions()) -> Model:
    """Approximation mode: every accepted iteration more than halves the residual norm.

    With ``B0 = ||f0 - mean(f0)||`` the accepted residuals obey
    ``||r_k|| <= 0.5**k * B0``.  When no grid candidate qualifies, integer
    degrees above ``max_degree`` are tried with the trend fitted on the whole
    pre-test range.  Raises ``GuaranteeUnreachableError`` (carrying the
    partial model) when even that fails.
    """
    pre, test = _prepare(series, options)
    actual = pre.values
    residual = pre
    prior = np.zeros(len(pre))
    window = _common_window(len(pre), options)
    bound = float(np.linalg.norm(actual - actual.mean()))
    zero = ZERO_RTOL * max(float(np.linalg.norm(actual)), 1e-300)
    norms = [float(np.linalg.norm(actual))]
    iterations = []
    stop = "max-iterations"
    unreachable = False
    for k in range(options.max_iterations):
        if norms[-1] <= zero:
            stop = "converged"
            break
        target = 0.5 * (bound if k == 0 else norms[-1])
        current = residual.values

        def admissible(c, current=current, target=target):
            left = np.linalg.norm(current - c.component)
            return left < target or left <= zero

        ws = _Workspace(residual, prior, actual, window, options)
        best = _search(ws, options, admissible)
        if best is None:
            best = _raise_degree(ws, options, admissible)
        if best is None:
            stop = "guarantee-unreachable"
            unreachable = True
            break
        iterations.append(best)
        prior = prior + best.component
        residual = residual.with_values(residual.values - best.component)
        norms.append(float(np.linalg.norm(residual.values)))
    model = Model(
        options, (pre.start_index, pre.end_index), iterations, window, stop,
        actual=pre, fitted=pre.with_values(prior), residual=residual,
        guaranteed=True, guarantee_unreachable=unreachable, residual_norms=norms,
    )
    _report(model, test)
    if unreachable:
        raise GuaranteeUnreachableError(
            f"no candidate halves the residual at iteration {len(iterations) + 1}", partial_model=model
        )
    return model


def _raise_degree(ws: _Workspace, options: FitOptions, admissible) -> Optional[IterationResult]:
    top = len(ws.residual) - 1
    for degree in range(options.max_degree + 1, top + 1):
        config = Configuration(None, "lsg-raw", "uniform", ("integer", degree))
        try:
            cand = ws.evaluate(config)
        except SingularFitError:
            log.info("guaranteed mode: degree %d is numerically singular, giving up", degree)
            return None
        except SelfApproxError:
            continue
        if admissible(cand):
            return cand
    return None


def _horizon_trend(it: IterationResult, idx: np.ndarray) -> tuple[np.ndarray, Optional[dict]]:
    try:
        return evaluate_trend(it.trend, idx).values, None
    except SignDomainError:
        t = it.trend
        # fall back to the bracketing fit carrying the larger exponent
        use_lower = t.blend_index * 2 >= t.subdivisions
        fallback = t.lower if use_lower else t.upper
        note = {"degree_used": fallback.degree, "blend": t.descriptor()}
        return evaluate_trend(fallback, idx).values, note


def forecast_components(model: Model, horizon: int, start: Optional[int] = None):
    """Per-iteration (trend, periodic) arrays on ``horizon`` samples after the fitted range.

    Returns ``(total, components, fallbacks)``.
    """
    if horizon < 0:
        raise InvalidInputError("horizon must be nonnegative")
    start = model.end_index if start is None else start
    idx = np.arange(start, start + horizon)
    total = np.zeros(horizon)
    components = []
    fallbacks = []
    for k, it in enumerate(model.iterations):
        trend, note = _horizon_trend(it, idx)
        if note is not None:
            fallbacks.append({"iteration": k + 1, **note})
        periodic = it.basic_element.values[(idx - it.phase_origin) % it.semi_period]
        components.append((trend, periodic))
        total += trend + periodic
    return total, components, fallbacks


def predict(model: Model, horizon: int) -> Series:
    total, _, _ = forecast_components(model, horizon)
    return Series(total, model.end_index)


def _metric_or_none(actual: np.ndarray, predicted: np.ndarray) -> Optional[MetricReport]:
    return error_metrics(actual, predicted) if actual.size else None


def _report(model: Model, test: Optional[Series]) -> None:
    """Fill in metrics; the only place the test window is read."""
    model.test = test
    m = len(model.actual)
    split_at = m - model.common_window
    actual = model.actual.values
    horizon = len(test) if test is not None else 0
    test_actual = test.values if test is not None else np.empty(0)
    _, comps, fallbacks = forecast_components(model, horizon)
    model.trend_fallbacks = fallbacks

    cumulative = np.zeros(m)
    cumulative_test = np.zeros(horizon)
    model.iteration_metrics = []
    for it, (trend, periodic) in zip(model.iterations, comps):
        cumulative = cumulative + it.component
        cumulative_test = cumulative_test + trend + periodic
        model.iteration_metrics.append(_window_metrics(actual, cumulative, split_at, test_actual, cumulative_test))
    model.metrics = _window_metrics(actual, model.fitted.values, split_at, test_actual, cumulative_test)


def _window_metrics(actual, fitted, split_at, test_actual, test_pred) -> dict:
    return {
        "train": _metric_or_none(actual[:split_at], fitted[:split_at]),
        "validation": _metric_or_none(actual[split_at:], fitted[split_at:]),
        "test": _metric_or_none(test_actual, test_pred),
    }
