"""Command-line entry point: ``selfapprox {period,fit,forecast,synth,backtest}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .backtest import rolling_backtest
from .dataio import (
    DatasetSpec,
    Recipe,
    emit,
    file_fingerprint,
    fmt,
    forecast_csv,
    load_csv,
    load_model,
    synth,
    _atomic_write,
)
from .errors import GuaranteeUnreachableError, SelfApproxError
from .forecaster import FitOptions, fit, fit_guaranteed
from .period import scan_semi_period

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3

log = logging.getLogger("selfapprox")


def _column(text):
    if text is None:
        return None
    return int(text) if text.lstrip("-").isdigit() else text


def _ratios(text):
    try:
        return tuple(float(r) for r in text.split(",") if r.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad ratio list {text!r}") from None


def _add_dataset_args(p):
    p.add_argument("file", type=Path)
    p.add_argument("--col", default=None, help="value column name or 0-based index (default: last)")
    header = p.add_mutually_exclusive_group()
    header.add_argument("--header", dest="has_header", action="store_const", const=True, default=None)
    header.add_argument("--no-header", dest="has_header", action="store_const", const=False)
    p.add_argument("--delimiter", default=",")


def _dataset(args) -> DatasetSpec:
    return DatasetSpec(args.file, _column(args.col), args.has_header, args.delimiter)


def _options(args, test_length: int) -> FitOptions:
    return FitOptions(
        max_iterations=args.max_iter,
        validation_ratios=args.ratios,
        max_degree=args.max_degree,
        fractional_n=args.frac_n,
        test_length=test_length,
        alpha=args.alpha,
        t_max=args.tmax,
        n_jobs=args.jobs,
    )


def _add_fit_args(p):
    p.add_argument("--ratios", type=_ratios, default=(0.10, 0.15, 0.20, 0.25))
    p.add_argument("--max-degree", type=int, default=10)
    p.add_argument("--frac-n", type=int, default=10)
    p.add_argument("--max-iter", type=int, default=10)
    p.add_argument("--alpha", type=float, default=0.9)
    p.add_argument("--tmax", type=int, default=None, help="largest candidate period (default: half the train part)")
    p.add_argument("--jobs", type=int, default=1, help="threads for candidate evaluation")


def cmd_period(args) -> int:
    series = load_csv(_dataset(args))
    scan = scan_semi_period(series, args.tmin, args.tmax)
    out = sys.stdout
    out.write("T,score\n")
    for period, score in scan.items():
        out.write(f"{period},{fmt(score)}\n")
    out.write(f"semi_period,{scan.best_period}\n")
    return EXIT_OK


def cmd_fit(args) -> int:
    series = load_csv(_dataset(args))
    options = _options(args, args.test)
    code = EXIT_OK
    try:
        model = (fit_guaranteed if args.guaranteed else fit)(series, options)
    except GuaranteeUnreachableError as exc:
        log.error("%s", exc)
        model = exc.partial_model
        code = EXIT_INFEASIBLE
    if not model.iterations:
        log.error("no feasible configuration in the first iteration")
        code = EXIT_INFEASIBLE
    dataset = file_fingerprint(args.file, len(series))
    dataset.update(value_column=args.col)
    files = emit(model, args.out, args.horizon, dataset, series.labels)
    table = model.metrics
    train, test = table["train"], table["test"]
    print(f"semi-periods: {' '.join(str(p) for p in model.semi_periods) or '-'} (stop: {model.stop_reason})")
    print("train_nmse,train_smape,test_nmse,test_smape")
    print(",".join(_cell(v) for v in (
        train.nmse if train else None, train.smape if train else None,
        test.nmse if test else None, test.smape if test else None,
    )))
    print(f"wrote {files.manifest.parent}")
    return code


def _cell(value) -> str:
    return "" if value is None else f"{value:.6g}"


def cmd_forecast(args) -> int:
    model = load_model(args.manifest)
    text = forecast_csv(model, args.horizon)
    if args.out:
        _atomic_write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_synth(args) -> int:
    series = synth(Recipe.parse(args.recipe), args.len, args.seed)
    text = "t,value\n" + "".join(f"{i},{fmt(v)}\n" for i, v in enumerate(series.values))
    _atomic_write(Path(args.out), text)
    return EXIT_OK


def cmd_backtest(args) -> int:
    series = load_csv(_dataset(args))
    options = _options(args, args.test)
    results = rolling_backtest(series, args.windows, args.test, args.naive_period, options)
    print("start,end,model_smape,naive_smape,model_wins")
    for r in results:
        print(f"{r.start},{r.end},{r.model_smape:.6g},{r.naive_smape:.6g},{int(r.model_wins)}")
    wins = sum(r.model_wins for r in results)
    print(f"model beats naive on {wins} of {len(results)} windows")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="selfapprox", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("period", help="print the LSG curve and the semi-period")
    _add_dataset_args(p)
    p.add_argument("--tmin", type=int, default=2)
    p.add_argument("--tmax", type=int, default=None)
    p.set_defaults(func=cmd_period)

    p = sub.add_parser("fit", help="run the full iterative fit and write the report")
    _add_dataset_args(p)
    p.add_argument("--test", type=int, default=0, help="samples held out at the end")
    _add_fit_args(p)
    p.add_argument("--guaranteed", action="store_true", help="require >50%% residual reduction per iteration")
    p.add_argument("--horizon", type=int, default=None, help="forecast length (default: --test)")
    p.add_argument("--out", type=Path, default=Path("selfapprox-out"))
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("forecast", help="extend a fitted model past its fitted range")
    p.add_argument("manifest", type=Path)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--out", default=None, help="CSV file (default: stdout)")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("synth", help="generate a test signal")
    p.add_argument("--recipe", required=True, help="e.g. 'trend=1,0.01;sin=24:1:0;noise=0.1'")
    p.add_argument("--len", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("backtest", help="compare against the seasonal naive forecast on trailing windows")
    _add_dataset_args(p)
    p.add_argument("--test", type=int, default=48, help="length of each test window")
    p.add_argument("--windows", type=int, default=4)
    p.add_argument("--naive-period", type=int, default=24)
    _add_fit_args(p)
    p.set_defaults(func=cmd_backtest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (SelfApproxError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
