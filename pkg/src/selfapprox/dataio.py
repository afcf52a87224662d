"""CSV ingestion, synthetic test signals, and report emission."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .basic_element import BasicElement
from .detrend import TrendModel
from .errors import CsvParseError, InvalidInputError
from .forecaster import Configuration, FitOptions, IterationResult, Model, forecast_components
from .series import Series

MANIFEST_SCHEMA = "selfapprox.manifest/1"


# ---------------------------------------------------------------- ingestion


@dataclass(frozen=True)
class DatasetSpec:
    path: Union[str, Path]
    value_column: Union[str, int, None] = None  # None: the last column
    has_header: Optional[bool] = None  # None: detect from the first row
    delimiter: str = ","


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(spec: DatasetSpec) -> Series:
    """Read one numeric column; the first column becomes the labels when it is not the value column."""
    text = Path(spec.path).read_text(encoding="utf-8-sig")
    rows = [(n, r) for n, r in enumerate(csv.reader(io.StringIO(text), delimiter=spec.delimiter), 1) if r]
    if not rows:
        raise CsvParseError(f"{spec.path}: file is empty")

    header = None
    has_header = spec.has_header
    if has_header is None:
        has_header = isinstance(spec.value_column, str) or not all(_is_number(c) for c in rows[0][1])
    if has_header:
        header = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
        if not rows:
            raise CsvParseError(f"{spec.path}: no data rows after the header")

    width = len(rows[0][1])
    col = spec.value_column
    if col is None:
        col = width - 1
    elif isinstance(col, str):
        if header is None or col not in header:
            raise InvalidInputError(f"{spec.path}: no column named {col!r}")
        col = header.index(col)
    if not 0 <= col < width:
        raise InvalidInputError(f"{spec.path}: column index {col} out of range for {width} columns")

    values = []
    labels = [] if col != 0 and width > 1 else None
    for line, row in rows:
        if col >= len(row):
            raise CsvParseError(f"{spec.path}: row {line} has no column {col}", row=line)
        cell = row[col].strip()
        try:
            value = float(cell)
        except ValueError:
            raise CsvParseError(f"{spec.path}: row {line}: cannot parse {cell!r} as a number", line, cell) from None
        if not math.isfinite(value):
            raise CsvParseError(f"{spec.path}: row {line}: non-finite value {cell!r}", line, cell)
        values.append(value)
        if labels is not None:
            labels.append(row[0].strip())
    return Series(np.array(values), 0, tuple(labels) if labels is not None else None)


def file_fingerprint(path: Union[str, Path], rows: int) -> dict:
    digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
    return {"name": Path(path).name, "rows": rows, "sha256": digest}


def values_fingerprint(values: np.ndarray) -> dict:
    digest = hashlib.sha256(np.ascontiguousarray(values, dtype="<f8").tobytes()).hexdigest()
    return {"name": None, "rows": int(values.size), "sha256": digest}


# ---------------------------------------------------------------- synthesis


@dataclass(frozen=True)
class Recipe:
    """Polynomial trend plus periodic terms plus Gaussian noise.

    ``periodic`` holds ``(shape, period, amplitude, phase)`` tuples where shape is
    ``"sin"`` or ``"saw"`` and phase is in radians.
    """

    trend: tuple = (0.0,)
    periodic: tuple = ()
    sigma: float = 0.0

    @classmethod
    def parse(cls, text: str) -> "Recipe":
        """Parse ``trend=1,0.01;sin=24:1:0;saw=7:0.5;noise=0.1``."""
        trend, periodic, sigma = (0.0,), [], 0.0
        for part in filter(None, (p.strip() for p in text.split(";"))):
            key, _, value = part.partition("=")
            key = key.strip().lower()
            try:
                if key == "trend":
                    trend = tuple(float(v) for v in value.split(","))
                elif key in ("sin", "saw"):
                    fields = [float(v) for v in value.split(":")]
                    if not 1 <= len(fields) <= 3:
                        raise ValueError(value)
                    period, amplitude, phase = fields + [None, 1.0, 0.0][len(fields):]
                    periodic.append((key, period, amplitude, phase))
                elif key == "noise":
                    sigma = float(value)
                else:
                    raise InvalidInputError(f"unknown recipe term {key!r}")
            except ValueError:
                raise InvalidInputError(f"malformed recipe term {part!r}") from None
        return cls(trend, tuple(periodic), sigma)


def synth(recipe: Recipe, length: int, seed: int = 0) -> Series:
    if length < 1:
        raise InvalidInputError("length must be at least 1")
    t = np.arange(length, dtype=float)
    y = np.polynomial.polynomial.polyval(t, recipe.trend)
    for shape, period, amplitude, phase in recipe.periodic:
        if period <= 0:
            raise InvalidInputError("periods must be positive")
        angle = 2.0 * np.pi * t / period + phase
        if shape == "sin":
            y = y + amplitude * np.sin(angle)
        else:
            frac = np.mod(angle / (2.0 * np.pi), 1.0)
            y = y + amplitude * (2.0 * frac - 1.0)
    if recipe.sigma > 0:
        y = y + np.random.default_rng(seed).normal(0.0, recipe.sigma, length)
    return Series(y)


# ---------------------------------------------------------------- emission


def fmt(x) -> str:
    """Shortest decimal that round-trips the float exactly."""
    return repr(float(x))


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def forecast_csv(model: Model, horizon: int, labels=None, actual=None) -> str:
    """CSV text of the forecast over ``horizon`` samples after the fitted range."""
    total, components, _ = forecast_components(model, horizon)
    header = ["index"]
    if labels is not None:
        header.append("label")
    if actual is not None:
        header.append("actual")
    header.append("predicted")
    for k in range(1, len(components) + 1):
        header += [f"component_trend_{k}", f"component_periodic_{k}"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for j in range(horizon):
        row = [str(model.end_index + j)]
        if labels is not None:
            row.append(labels[j])
        if actual is not None:
            row.append(fmt(actual[j]))
        row.append(fmt(total[j]))
        for trend, periodic in components:
            row += [fmt(trend[j]), fmt(periodic[j])]
        writer.writerow(row)
    return buf.getvalue()


def _metrics_dict(block: dict) -> dict:
    return {name: (rep.to_dict() if rep is not None else None) for name, rep in block.items()}


def manifest_dict(model: Model, dataset: Optional[dict] = None) -> dict:
    start, end = model.span
    w = model.common_window
    test_len = len(model.test) if model.test is not None else 0
    train, test = model.metrics.get("train"), model.metrics.get("test")
    iterations = []
    for k, it in enumerate(model.iterations):
        entry = it.summary()
        entry.update(
            phase_origin=it.phase_origin,
            trend=it.trend.to_dict(),
            basic_element=it.basic_element.to_dict(),
        )
        if k < len(model.iteration_metrics):
            entry["metrics"] = _metrics_dict(model.iteration_metrics[k])
        iterations.append(entry)
    doc = {
        "schema": MANIFEST_SCHEMA,
        "mode": "guaranteed" if model.guaranteed else "fit",
        "dataset": dataset,
        "options": model.options.to_dict(),
        "ranges": {
            "fit": [start, end],
            "train": [start, end - w],
            "validation": [end - w, end],
            "test": [end, end + test_len],
        },
        "stop_reason": model.stop_reason,
        "semi_periods": model.semi_periods,
        "table": {
            "train_nmse": train.nmse if train else None,
            "train_smape": train.smape if train else None,
            "test_nmse": test.nmse if test else None,
            "test_smape": test.smape if test else None,
        },
        "metrics": _metrics_dict(model.metrics),
        "iterations": iterations,
        "trend_fallbacks": model.trend_fallbacks,
    }
    if model.guaranteed:
        doc["guarantee"] = {
            "unreachable": model.guarantee_unreachable,
            "residual_norms": model.residual_norms,
        }
    return doc


def dumps_manifest(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n"


def load_model(path: Union[str, Path]) -> Model:
    """Rebuild a forecast-capable model from a manifest written by :func:`emit`."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("schema") != MANIFEST_SCHEMA:
        raise InvalidInputError(f"{path}: not a {MANIFEST_SCHEMA} document")
    iterations = []
    for entry in doc["iterations"]:
        element = BasicElement.from_dict(entry["basic_element"])
        iterations.append(
            IterationResult(
                config=Configuration.from_dict(entry["config"]),
                trend=TrendModel.from_dict(entry["trend"]),
                trend_values=None,
                semi_period=int(entry["semi_period"]),
                basic_element=element,
                periodic_estimate=None,
                validation_smape=float(entry["validation_smape"]),
                train_length=int(entry["train_length"]),
                phase_origin=int(entry["phase_origin"]),
            )
        )
    fit_range = doc["ranges"]["fit"]
    w = fit_range[1] - doc["ranges"]["validation"][0]
    return Model(
        FitOptions.from_dict(doc["options"]),
        (int(fit_range[0]), int(fit_range[1])),
        iterations,
        w,
        doc["stop_reason"],
        guaranteed=doc["mode"] == "guaranteed",
    )


def _plot_text(index, values) -> str:
    return "".join(f"{i}\t{fmt(v)}\n" for i, v in zip(index, values))


@dataclass
class EmittedFiles:
    manifest: Path
    forecast: Path
    plot_actual: Path
    plot_predicted: Path
    extra: list = field(default_factory=list)


def emit(
    model: Model,
    out_dir: Union[str, Path],
    horizon: Optional[int] = None,
    dataset: Optional[dict] = None,
    labels=None,
) -> EmittedFiles:
    """Write manifest.json, forecast.csv and the two plot-data files into ``out_dir``.

    ``horizon`` defaults to the test length; ``labels`` are the labels of the
    whole input series (optional).
    """
    out = Path(out_dir)
    test_len = len(model.test) if model.test is not None else 0
    horizon = test_len if horizon is None else horizon
    end = model.end_index
    start = model.span[0]
    h_labels = None
    if labels is not None and len(labels) >= end - start + horizon:
        h_labels = labels[end - start:end - start + horizon]
    h_actual = None
    if model.test is not None and horizon <= test_len:
        h_actual = model.test.values[:horizon]

    files = EmittedFiles(
        out / "manifest.json", out / "forecast.csv", out / "plot_actual.tsv", out / "plot_predicted.tsv"
    )
    _atomic_write(files.manifest, dumps_manifest(manifest_dict(model, dataset)))
    _atomic_write(files.forecast, forecast_csv(model, horizon, h_labels, h_actual))

    known = model.actual.values
    if model.test is not None:
        known = np.concatenate([known, model.test.values])
    _atomic_write(files.plot_actual, _plot_text(range(start, start + known.size), known))
    total, _, _ = forecast_components(model, horizon)
    predicted = np.concatenate([model.fitted.values, total])
    _atomic_write(files.plot_predicted, _plot_text(range(start, start + predicted.size), predicted))
    return files
