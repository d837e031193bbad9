"""Command-line interface: ``synth``, ``decompose`` and ``eval``.

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import csvio
from .admm import SingularSystem
from .core import (DecompositionError, MultiScaleSeries, TimeSeries, ValidationError,
                   reconstruct, validate_multiscale)
from .pipeline import PipelineConfig, StageError, decompose
from .synth import SynthConfig, generate, split_series

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_SOLVER = 0, 1, 2, 3

TRUTH_FILES = {
    "trend": "trend.csv",
    "seasonal_short": "seasonal_short.csv",
    "seasonal_long": "seasonal_long.csv",
    "noise": "noise.csv",
    "outliers": "outliers.csv",
}
SERIES_FILE = "series.csv"


class SolverFailure(DecompositionError):
    pass


def _synth_keys() -> set[str]:
    return set(SynthConfig.field_names()) | set(csvio.SPLIT_KEYS)


def _pipeline_keys() -> set[str]:
    return set(csvio.pipeline_config_items(PipelineConfig()))


def _load_config(path: Optional[str]) -> dict[str, str]:
    """Read a config file and reject keys no subcommand understands."""
    if path is None:
        return {}
    values = csvio.read_config(path)
    unknown = set(values) - _synth_keys() - _pipeline_keys()
    if unknown:
        raise csvio.ConfigError(f"{path}: unknown config key(s) {sorted(unknown)}")
    return values


# --------------------------------------------------------------------------
# subcommands

def cmd_synth(args) -> int:
    values = _load_config(args.config)
    cfg, split = csvio.synth_config_from(csvio.split_known(values, _synth_keys()))
    gt = generate(cfg)
    out = Path(args.out_dir)
    csvio.write_series_csv(out / SERIES_FILE, gt.series)
    for name, fname in TRUTH_FILES.items():
        csvio.write_series_csv(out / fname, getattr(gt, name))
    meta = {"config": asdict(cfg), "split": split, "breakpoints": list(gt.breakpoints)}
    _write_json(out / "truth.json", meta)
    print(f"wrote {len(gt)} samples to {out}")
    return EXIT_OK


def _multiscale_from_args(args) -> tuple[MultiScaleSeries, int]:
    """Build the multi-scale input; returns it with the absolute index of the window start."""
    index, values = csvio.read_series_with_index(args.input)
    if args.low is None:
        m = split_series(values, args.high_len, args.factor, args.period_short, args.period_long)
        return m, int(index[0]) + values.size - args.high_len
    low = csvio.read_series_csv(args.low)
    if values.size != args.high_len:
        raise ValidationError(
            f"--high-len {args.high_len} does not match the {values.size} rows of {args.input}")
    m = MultiScaleSeries(high=TimeSeries(values, 1), low=TimeSeries(low, args.factor),
                         factor_n=args.factor, period_short=args.period_short,
                         period_long=args.period_long)
    validate_multiscale(m)
    return m, int(index[0])


def cmd_decompose(args) -> int:
    values = _load_config(args.config)
    cfg = csvio.pipeline_config_from(csvio.split_known(values, _pipeline_keys()))
    m, start = _multiscale_from_args(args)
    timings: dict[str, float] = {}
    try:
        d, report = decompose(m, cfg, timings=timings)
    except StageError as exc:
        if exc.stage == "admm" or isinstance(exc.cause, SingularSystem):
            raise SolverFailure(str(exc)) from exc
        raise exc.cause from exc
    csvio.write_components_csv(args.out, d, start_index=start)

    raw = m.high.values
    err = float(np.max(np.abs(raw - reconstruct(d))))
    scale = np.max(np.abs(np.vstack([d.trend, d.seasonal_short, d.seasonal_long, d.remainder,
                                     raw])), axis=0)
    bound = float(np.max(8.0 * np.spacing(scale)))
    run_report = {
        "input": {"path": str(args.input), "low_path": args.low, "high_len": m.high_len,
                  "low_len": int(m.low.values.size), "period_short": m.period_short,
                  "period_long": m.period_long, "factor": m.factor_n,
                  "window_start_index": start},
        "config": csvio.pipeline_config_items(cfg),
        "solve": asdict(report),
        "stage_ms": timings,
        "reconstruction": {"max_abs_error": err, "bound_8ulp": bound},
        "outputs": {"components": str(args.out), "report": str(args.report)},
    }
    _write_json(args.report, run_report)
    status = "converged" if report.converged else "stopped at iteration limit"
    print(f"decomposed {m.high_len} samples in {report.iterations_run} iterations ({status})")
    return EXIT_OK


def _truth_window(truth_dir: Path, name: str, index: np.ndarray) -> np.ndarray:
    t_index, t_values = csvio.read_series_with_index(truth_dir / TRUTH_FILES[name])
    pos = index - t_index[0]
    if pos[0] < 0 or pos[-1] >= t_values.size:
        raise ValidationError(f"estimated indices {index[0]}..{index[-1]} fall outside "
                              f"ground truth {t_index[0]}..{t_index[-1]}")
    return t_values[pos]


def cmd_eval(args) -> int:
    index, d = csvio.read_components_csv(args.estimated)
    truth = Path(args.truth_dir)
    t = {name: _truth_window(truth, name, index)
         for name in ("trend", "seasonal_short", "seasonal_long", "noise", "outliers")}
    rows = [
        ("trend", csvio.mse(d.trend, t["trend"])),
        ("seasonal_short", csvio.mse(d.seasonal_short, t["seasonal_short"])),
        ("seasonal_long", csvio.mse(d.seasonal_long, t["seasonal_long"])),
        ("seasonal_combined", csvio.mse(d.seasonal_short + d.seasonal_long,
                                        t["seasonal_short"] + t["seasonal_long"])),
        ("remainder", csvio.mse(d.remainder, t["noise"] + t["outliers"])),
    ]
    print("component,mse")
    for name, value in rows:
        print(f"{name},{value:.12g}")
    return EXIT_OK


def _write_json(path, obj) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise csvio.IoError(f"cannot write {path}: {exc.strerror or exc}") from exc


# --------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    # usage errors are validation errors, not I/O errors (argparse would exit 2)
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="msdecomp",
                     description="Multi-scale seasonal-trend decomposition.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic series with ground truth")
    p.add_argument("--config", help="key = value file with generator settings")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("decompose", help="decompose the high-resolution window of a series")
    p.add_argument("--input", required=True, help="index,value CSV")
    p.add_argument("--low", help="stored low-resolution history; --input is then the window")
    p.add_argument("--period-short", type=int, required=True)
    p.add_argument("--period-long", type=int, required=True)
    p.add_argument("--factor", type=int, required=True)
    p.add_argument("--high-len", type=int, required=True)
    p.add_argument("--config", help="key = value file with pipeline settings")
    p.add_argument("--out", required=True, help="components CSV")
    p.add_argument("--report", required=True, help="JSON run report")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("eval", help="per-component MSE against ground truth")
    p.add_argument("--estimated", required=True, help="components CSV from decompose")
    p.add_argument("--truth-dir", required=True, help="output directory of synth")
    p.set_defaults(func=cmd_eval)
    return parser


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, SolverFailure):
        return EXIT_SOLVER
    if isinstance(exc, csvio.IoError):
        return EXIT_IO
    if isinstance(exc, ValidationError):
        return EXIT_VALIDATION
    return EXIT_SOLVER


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DecompositionError as exc:
        print(f"msdecomp {args.command}: error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
