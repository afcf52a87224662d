"""Acceptance criteria, one test each; verdicts are summarised at the end of the run."""

import time
from pathlib import Path

import numpy as np
import pytest

from oracles import lsg_bruteforce, metrics_literal, smape_literal
from selfapprox.backtest import rolling_backtest
from selfapprox.cli import main
from selfapprox.dataio import DatasetSpec, Recipe, emit, load_csv, synth
from selfapprox.detrend import TrendModel, evaluate_trend, fit_polynomial, fractional_blend
from selfapprox.errors import GuaranteeUnreachableError
from selfapprox.forecaster import FitOptions, fit, fit_guaranteed
from selfapprox.metrics import error_metrics, smape
from selfapprox.period import lsg_score, scan_semi_period

pytestmark = pytest.mark.acceptance

DATA = Path(__file__).parent / "data"


def test_exact_period_recovery(criterion):
    with criterion(1, "exact-period recovery for P in {7, 24, 50}"):
        for p in (7, 24, 50):
            x = np.sin(2 * np.pi * np.arange(10 * p) / p)
            start = time.perf_counter()
            scan = scan_semi_period(x)
            elapsed = time.perf_counter() - start
            assert scan.best_period == p, f"P={p}: got {scan.best_period}"
            assert lsg_score(x, p) < 1e-9
            assert elapsed < 1.0, f"P={p} took {elapsed:.2f}s"


def test_lsg_matches_bruteforce(criterion):
    with criterion(2, "LSG score equals the literal segment formula on 200 series"):
        rng = np.random.default_rng(2024)
        start = time.perf_counter()
        for _ in range(200):
            x = rng.normal(size=rng.integers(10, 201)) * rng.uniform(0.1, 100)
            for p in range(1, x.size // 2 + 1):
                fast, slow = lsg_score(x, p), lsg_bruteforce(x, p)
                assert abs(fast - slow) <= 1e-12 * abs(slow), (x.size, p, fast, slow)
        assert time.perf_counter() - start < 30.0


def test_metric_oracles(criterion):
    with criterion(3, "metrics match direct definitions on 1000 pairs; symmetry and bounds"):
        rng = np.random.default_rng(7)
        for k in range(1000):
            n = int(rng.integers(1, 50))
            a = rng.uniform(0.01, 100.0, n)
            p = rng.uniform(0.01, 100.0, n)
            if k % 2:  # mixed-sign pairs for the non-percentage metrics
                a, p = a - 50.0, p - 50.0
            rep, lit = error_metrics(a, p), metrics_literal(a, p)
            if k % 2 == 0:
                s = smape_literal(a, p)
                assert abs(rep.smape - s) <= 1e-12 * s
            for key in ("mse", "mae", "nmse", "mape"):
                want, got = lit[key], getattr(rep, key)
                if want is None:
                    assert got is None
                else:
                    assert abs(got - want) <= 1e-12 * abs(want), (key, got, want)
            s = smape(a, p)
            assert s == smape(p, a)
            assert 0.0 <= s <= 200.0


def test_fractional_blend(criterion):
    with criterion(4, "fractional blend endpoints, interior, and the (4, 9) constant case"):
        t = np.arange(60.0)
        y = 3 + 0.2 * t + 0.004 * t**2 + 0.5 * np.sin(t / 3)
        grid = range(60)
        for m in range(4):
            lo, hi = fit_polynomial(y, m), fit_polynomial(y, m + 1)
            f_lo, f_hi = evaluate_trend(lo, grid).values, evaluate_trend(hi, grid).values
            assert np.all(f_lo > 0) and np.all(f_hi > 0)
            n = 10
            end_lo = evaluate_trend(fractional_blend(lo, hi, n, n), grid).values
            end_hi = evaluate_trend(fractional_blend(lo, hi, 0, n), grid).values
            assert np.abs(end_lo - f_lo).max() <= 1e-12 * np.abs(f_lo).max()
            assert np.abs(end_hi - f_hi).max() <= 1e-12 * np.abs(f_hi).max()
            a, b = np.minimum(f_lo, f_hi), np.maximum(f_lo, f_hi)
            differ = f_lo != f_hi
            for i in range(1, n):
                v = evaluate_trend(fractional_blend(lo, hi, i, n), grid).values
                assert np.all((v[differ] > a[differ]) & (v[differ] < b[differ]))
                assert np.array_equal(v[~differ], f_lo[~differ])
        four = TrendModel("integer", np.array([4.0]))
        nine = TrendModel("integer", np.array([9.0, 0.0]))
        assert evaluate_trend(fractional_blend(four, nine, 1, 2), [0]).values[0] == 6.0


def test_clean_signal_end_to_end(criterion):
    with criterion(5, "line + sine(24): test SMAPE < 0.5, NMSE < 0.01, T*=24 first, < 10 s"):
        y = synth(Recipe.parse("trend=1,0.01;sin=24:1:0"), 720)
        start = time.perf_counter()
        model = fit(y, FitOptions(test_length=72))
        elapsed = time.perf_counter() - start
        assert model.semi_periods[0] == 24, model.semi_periods
        assert model.metrics["test"].smape < 0.5
        assert model.metrics["test"].nmse < 0.01
        assert elapsed < 10.0


def test_two_period_decomposition(criterion):
    with criterion(6, "periods 24 and 7: first two iterations detect {24, 7}, test SMAPE < 2, < 30 s"):
        # the offset trend keeps SMAPE away from zero crossings of the signal
        y = synth(Recipe.parse("trend=1,0.01;sin=24:1:0;sin=7:0.5:0"), 1008)
        start = time.perf_counter()
        model = fit(y, FitOptions(test_length=72))
        elapsed = time.perf_counter() - start
        assert model.metrics["test"].smape < 2
        assert elapsed < 30.0
        assert set(model.semi_periods[:2]) == {24, 7}, f"detected {model.semi_periods}"


def _assert_guarantee(model):
    f0 = model.actual.values
    b0 = np.linalg.norm(f0 - f0.mean())
    for k, norm in enumerate(model.residual_norms[1:], start=1):
        assert norm <= 0.5**k * b0, (k, norm, 0.5**k * b0)


def test_guaranteed_bound(criterion):
    with criterion(7, "guaranteed mode halves the residual every accepted iteration"):
        t = np.arange(200.0)
        cubic = fit_guaranteed(t**3, FitOptions())
        assert cubic.iterations
        _assert_guarantee(cubic)
        clean = fit_guaranteed(synth(Recipe.parse("trend=2,0.05;sin=12:1.5"), 300), FitOptions())
        assert clean.iterations
        _assert_guarantee(clean)
        noise = synth(Recipe.parse("noise=1"), 200, seed=11)
        try:
            model = fit_guaranteed(noise, FitOptions())
        except GuaranteeUnreachableError as exc:
            model = exc.partial_model
            assert model.guarantee_unreachable
        _assert_guarantee(model)


def test_conservation_and_blindness(criterion):
    with criterion(8, "additive decomposition to 1e-9; test window does not steer the fit"):
        y = synth(Recipe.parse("trend=20,0.03;sin=24:2;saw=7:0.7;noise=0.3"), 600, seed=8).values
        model = fit(y, FitOptions(test_length=60))
        f0 = model.actual.values
        total = sum(model.components())
        assert np.abs((f0 - total) - model.residual.values).max() <= 1e-9 * np.abs(f0).max()
        withheld = fit(y[:-60], FitOptions())
        assert [it.config for it in model.iterations] == [it.config for it in withheld.iterations]
        assert model.semi_periods == withheld.semi_periods
        assert np.array_equal(model.fitted.values, withheld.fitted.values)


def test_real_hourly_data_beats_naive(criterion):
    with criterion(9, "hourly demand CSV: beats repeat-last-day naive on >= 3 of 4 windows"):
        series = load_csv(DatasetSpec(DATA / "taylor_hourly.csv", "demand_mw"))
        assert len(series) >= 1000
        results = rolling_backtest(series, windows=4, test_length=48, naive_period=24)
        wins = sum(r.model_wins for r in results)
        detail = ", ".join(f"{r.model_smape:.2f} vs {r.naive_smape:.2f}" for r in results)
        assert wins >= 3, f"{wins}/4 wins ({detail})"


def test_determinism(criterion, tmp_path):
    with criterion(10, "repeated and parallel fits emit byte-identical files"):
        data = tmp_path / "in.csv"
        assert main(["synth", "--recipe", "trend=50,0.02;sin=24:3;saw=12:1;noise=0.5", "--len", "500",
                     "--seed", "3", "--out", str(data)]) == 0
        runs = []
        for name, jobs in (("a", "1"), ("b", "1"), ("c", "4")):
            out = tmp_path / name
            assert main(["fit", str(data), "--test", "48", "--jobs", jobs, "--out", str(out)]) == 0
            runs.append(out)
        for name in ("manifest.json", "forecast.csv", "plot_actual.tsv", "plot_predicted.tsv"):
            first = (runs[0] / name).read_bytes()
            for other in runs[1:]:
                assert (other / name).read_bytes() == first, name
        series = load_csv(DatasetSpec(data, "value"))
        a = fit(series, FitOptions(test_length=48))
        b = fit(series, FitOptions(test_length=48, n_jobs=3))
        emit(a, tmp_path / "api_a")
        emit(b, tmp_path / "api_b")
        for name in ("manifest.json", "forecast.csv"):
            assert (tmp_path / "api_a" / name).read_bytes() == (tmp_path / "api_b" / name).read_bytes()
