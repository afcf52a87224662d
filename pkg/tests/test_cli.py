import json

import numpy as np
import pytest

from selfapprox.cli import main
from selfapprox.dataio import DatasetSpec, load_csv


@pytest.fixture
def signal(tmp_path):
    path = tmp_path / "signal.csv"
    assert main(["synth", "--recipe", "trend=5,0.02;sin=24:1;noise=0.05", "--len", "300", "--seed", "1", "--out", str(path)]) == 0
    return path


def test_synth_writes_file(signal):
    s = load_csv(DatasetSpec(signal, "value"))
    assert len(s) == 300
    assert signal.read_text().startswith("t,value\n0,")


def test_period_command(tmp_path, capsys):
    path = tmp_path / "periodic.csv"
    main(["synth", "--recipe", "trend=3;sin=24:1;saw=8:0.5", "--len", "240", "--out", str(path)])
    assert main(["period", str(path), "--tmax", "60"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "T,score"
    assert len(lines) == 1 + 59 + 1
    assert lines[-1] == "semi_period,24"


def test_fit_then_forecast(signal, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["fit", str(signal), "--test", "24", "--max-iter", "2", "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "train_nmse,train_smape,test_nmse,test_smape" in printed
    doc = json.loads((out / "manifest.json").read_text())
    assert doc["dataset"]["rows"] == 300
    assert doc["semi_periods"][0] == 24

    target = tmp_path / "f.csv"
    assert main(["forecast", str(out / "manifest.json"), "--horizon", "10", "--out", str(target)]) == 0
    rows = target.read_text().splitlines()
    assert len(rows) == 11
    assert rows[1].startswith("276,")
    predicted = load_csv(DatasetSpec(target, "predicted")).values
    in_run = load_csv(DatasetSpec(out / "forecast.csv", "predicted")).values
    assert np.array_equal(predicted, in_run[:10])


def test_fit_is_byte_identical_across_runs_and_jobs(signal, tmp_path):
    args = ["fit", str(signal), "--test", "24", "--max-iter", "2"]
    assert main([*args, "--out", str(tmp_path / "a")]) == 0
    assert main([*args, "--jobs", "3", "--out", str(tmp_path / "b")]) == 0
    for name in ("manifest.json", "forecast.csv", "plot_actual.tsv", "plot_predicted.tsv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_input_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("v\n1\nabc\n")
    assert main(["period", str(bad)]) == 2
    assert main(["period", str(tmp_path / "missing.csv")]) == 2
    short = tmp_path / "short.csv"
    short.write_text("\n".join(str(v) for v in range(10)))
    assert main(["fit", str(short), "--out", str(tmp_path / "o")]) == 2


def test_unreachable_guarantee_exits_3(tmp_path):
    noise = tmp_path / "noise.csv"
    assert main(["synth", "--recipe", "noise=1", "--len", "200", "--seed", "5", "--out", str(noise)]) == 0
    out = tmp_path / "g"
    assert main(["fit", str(noise), "--guaranteed", "--out", str(out)]) == 3
    doc = json.loads((out / "manifest.json").read_text())
    assert doc["guarantee"]["unreachable"] is True


def test_backtest_command(tmp_path, capsys):
    path = tmp_path / "s.csv"
    main(["synth", "--recipe", "trend=10;sin=24:2;noise=0.1", "--len", "400", "--out", str(path)])
    assert main(["backtest", str(path), "--test", "24", "--windows", "2", "--max-iter", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "start,end,model_smape,naive_smape,model_wins"
    assert lines[1].startswith("352,376,")
    assert lines[-1].startswith("model beats naive on")
