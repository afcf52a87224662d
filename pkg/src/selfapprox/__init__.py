"""Self-approximation forecasting: semi-period detection, polynomial de-trending,
basic-element tiling and iterative residual fitting."""

__version__ = "0.1.0"

from .basic_element import BasicElement, WeightingStrategy, build_basic_element, tile
from .detrend import TrendModel, detrend, evaluate_trend, fit_polynomial, fractional_blend
from .errors import *  # noqa: F401,F403
from .forecaster import (
    Configuration,
    FitOptions,
    IterationResult,
    Model,
    fit,
    fit_guaranteed,
    predict,
    run_candidate,
    select_configuration,
)
from .metrics import MetricReport, error_metrics, smape
from .period import PeriodScan, lsg_score, scan_semi_period
from .series import SegmentSet, Series, SplitSpec, partition, split, subtract
