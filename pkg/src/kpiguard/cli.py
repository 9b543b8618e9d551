"""Command-line surface: detect, evaluate, generate, bench-perf.

Exit codes: 0 success, 1 configuration problem, 2 data problem. All
diagnostics go to stderr. Every command is deterministic given its flags;
only bench-perf prints wall-clock timings.

Config files are flat ``key = value`` text. Recognized keys (all optional):

    forecaster            seasonal_quartile | naive
    candidate_source      all_scores | pot_peaks
    pot_quantile          float in (0, 1)
    forecaster_window_days  int
    detector_window_days    int
    drift_check_every     points between drift checks, 0 disables
    periodicity_limit     int >= 1, applied to both tails
    proportion_limit      float in (0, 0.5), applied to both tails
    granularity_hours     int dividing 24; omit for whole-day buckets
    shrink_factor         float in (0, 1)

Lines starting with '#' and blank lines are ignored.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .core import (
    BucketGranularity,
    ConfigError,
    ScoreSeries,
    SeriesValidationError,
    Tail,
    ThresholdConfig,
)
from .dataio import (
    DataError,
    Family,
    GeneratorError,
    Splits,
    SplitRange,
    SyntheticSpec,
    TailMode,
    generate_synthetic,
    read_csv,
    write_csv,
)
from .detect import DegenerateWindowError
from .evaluate import EvaluationError, benchmark, write_report
from .pipeline import (
    CandidateSource,
    DAY_POINTS_15MIN,
    ForecasterKind,
    InsufficientHistoryError,
    PipelineConfig,
    PipelineError,
    step,
    warm_up,
)
from .thresholding import select_threshold

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2

_DAY = 86400

_CONFIG_KEYS = {
    "forecaster",
    "candidate_source",
    "pot_quantile",
    "forecaster_window_days",
    "detector_window_days",
    "drift_check_every",
    "periodicity_limit",
    "proportion_limit",
    "granularity_hours",
    "shrink_factor",
}


def _parse_config_file(path: Path) -> PipelineConfig:
    if not path.exists():
        raise DataError(f"config file not found: {path}")
    raw: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if "=" not in text:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = text.partition("=")
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown config key '{key}'")
        raw[key] = value.strip()
    return build_pipeline_config(raw)


def build_pipeline_config(raw: dict[str, str]) -> PipelineConfig:
    """Assemble a PipelineConfig from flat string settings."""
    try:
        forecaster = ForecasterKind(raw.get("forecaster", "seasonal_quartile"))
        candidate_source = CandidateSource(raw.get("candidate_source", "all_scores"))
        pot_quantile = float(raw.get("pot_quantile", "0.98"))
        fc_days = int(raw.get("forecaster_window_days", "28"))
        det_days = int(raw.get("detector_window_days", "7"))
        drift_every = int(raw.get("drift_check_every", str(DAY_POINTS_15MIN)))
        periodicity = int(raw.get("periodicity_limit", "3"))
        proportion = float(raw.get("proportion_limit", "0.01"))
        shrink = float(raw.get("shrink_factor", "0.5"))
        hours_text = raw.get("granularity_hours", "")
        granularity = (
            BucketGranularity()
            if hours_text == ""
            else BucketGranularity.multi_hour(int(hours_text))
        )
    except ValueError as e:
        raise ConfigError(f"bad config value: {e}") from e
    left = ThresholdConfig(
        Tail.LEFT,
        periodicity_limit=periodicity,
        proportion_limit=proportion,
        granularity=granularity,
    )
    right = ThresholdConfig(
        Tail.RIGHT,
        periodicity_limit=periodicity,
        proportion_limit=proportion,
        granularity=granularity,
    )
    return PipelineConfig(
        forecaster_window=fc_days * _DAY,
        detector_window=det_days * _DAY,
        drift_check_every=drift_every,
        forecaster=forecaster,
        candidate_source=candidate_source,
        pot_quantile=pot_quantile,
        left=left,
        right=right,
        range_shrink_factor=shrink,
    )


def _load_config(arg: str | None) -> PipelineConfig:
    if arg is None:
        return PipelineConfig()
    return _parse_config_file(Path(arg))


def _parse_split_days(text: str) -> tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError(f"--split-days must be 'train,val,test', got {text!r}")
    days = tuple(int(p) for p in parts)
    if any(d < 1 for d in days):
        raise ConfigError("--split-days entries must be >= 1")
    return days  # type: ignore[return-value]


def _splits_for(start: int, interval: int, n: int, days: tuple[int, int, int]) -> Splits:
    t0 = start
    t1 = t0 + days[0] * _DAY
    t2 = t1 + days[1] * _DAY
    t3 = t2 + days[2] * _DAY
    end = start + n * interval
    if t3 > end:
        raise DataError(
            f"series covers {(end - start) // _DAY} days, but splits need "
            f"{sum(days)}"
        )
    return Splits(SplitRange(t0, t1), SplitRange(t1, t2), SplitRange(t2, t3))


def cmd_detect(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    dataset = read_csv(
        args.input,
        timestamp_col=args.timestamp_col,
        value_col=args.value_col,
        label_col=args.label_col,
    )
    series = dataset.series
    fc_points = config.forecaster_window // series.interval
    if len(series) <= fc_points:
        raise DataError(
            f"{args.input}: {len(series)} points cannot cover the "
            f"{fc_points}-point warm-up window plus a stream"
        )
    history = series.slice(0, fc_points)
    state = warm_up(history, config, stream_id=dataset.kpi_id)
    ts = series.timestamps()
    out = Path(args.output)
    with out.open("w", newline="\n", encoding="utf-8") as fh:
        fh.write("timestamp,value,residual,score,label,left_thr,right_thr,drift\n")
        for i in range(fc_points, len(series)):
            v = step(state, (int(ts[i]), float(series.values[i])))
            drift = v.drift.kind.value if v.drift is not None else ""
            line = (
                f"{v.timestamp},{v.value!r},{v.residual!r},{v.score!r},"
                f"{v.label},{v.left_threshold!r},{v.right_threshold!r},{drift}"
            )
            fh.write(line + "\n")
            if args.emit_verdicts:
                print(line)
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    paths = [p for chunk in args.input for p in chunk.split(",") if p]
    if not paths:
        raise ConfigError("no input datasets given")
    days = _parse_split_days(args.split_days)
    datasets = []
    for p in paths:
        ds = read_csv(
            p,
            timestamp_col=args.timestamp_col,
            value_col=args.value_col,
            label_col=args.label_col,
        )
        splits = _splits_for(ds.series.start, ds.series.interval, len(ds.series), days)
        datasets.append(replace(ds, splits=splits))
    report_dir = Path(args.report)
    report = benchmark(
        datasets, {args.config_name: config}, verdict_dir=report_dir / "verdicts"
    )
    paths_written = write_report(report, report_dir)
    for kind, path in paths_written.items():
        print(f"wrote {kind}: {path}", file=sys.stderr)
    return EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    spec = SyntheticSpec(
        family=Family(args.family),
        seed=args.seed,
        interval=args.interval,
        span=args.days * _DAY,
        anomaly_rate=args.rate,
        anomaly_magnitude=args.magnitude,
        tails=TailMode(args.tails),
    )
    dataset = generate_synthetic(spec)
    write_csv(dataset, args.out)
    return EXIT_OK


def cmd_bench_perf(args: argparse.Namespace) -> int:
    sizes = args.n or [100_000, 1_000_000]
    config = ThresholdConfig(Tail.RIGHT)
    rng = np.random.default_rng(7)
    timings = []
    for n in sizes:
        scores = ScoreSeries(0, 900, rng.standard_normal(n))
        best = float("inf")
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            select_threshold(scores, config)
            best = min(best, time.perf_counter() - t0)
        timings.append((n, best))
        print(f"n={n:>9d}  best_wall={best:.4f}s")
    for (n1, t1), (n2, t2) in zip(timings, timings[1:]):
        ratio = t2 / t1 if t1 > 0 else float("inf")
        print(f"ratio {n2}/{n1}: {ratio:.2f}x wall time for {n2 / n1:.0f}x points")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kpiguard",
        description="Streaming KPI anomaly detection with adaptive thresholds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="stream a CSV and emit per-point verdicts")
    p.add_argument("--input", required=True, help="input CSV path")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--output", required=True, help="verdict CSV path")
    p.add_argument(
        "--emit-verdicts",
        action="store_true",
        help="also print each verdict line to stdout",
    )
    p.add_argument("--timestamp-col", default="timestamp")
    p.add_argument("--value-col", default="value")
    p.add_argument("--label-col", default="label")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("evaluate", help="score labeled CSVs and write a report trio")
    p.add_argument(
        "--input",
        action="append",
        default=[],
        help="labeled CSV path (repeatable, comma-splittable)",
    )
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--config-name", default="default", help="config label in reports")
    p.add_argument("--report", required=True, help="report output directory")
    p.add_argument(
        "--split-days",
        default="28,31,30",
        help="train,val,test split lengths in days",
    )
    p.add_argument("--timestamp-col", default="timestamp")
    p.add_argument("--value-col", default="value")
    p.add_argument("--label-col", default="label")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("generate", help="write a synthetic labeled KPI CSV")
    p.add_argument("--family", choices=["seasonal", "stochastic"], required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--interval", type=int, default=900)
    p.add_argument("--days", type=int, default=89)
    p.add_argument("--rate", type=float, default=0.003)
    p.add_argument("--magnitude", type=float, default=8.0)
    p.add_argument("--tails", choices=["left", "right", "both"], default="both")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser(
        "bench-perf", help="time threshold selection across window sizes"
    )
    p.add_argument(
        "--n", type=int, action="append", help="window size (repeatable)"
    )
    p.add_argument("--repeat", type=int, default=3)
    p.set_defaults(func=cmd_bench_perf)

    return parser


_DATA_ERRORS = (
    DataError,
    SeriesValidationError,
    DegenerateWindowError,
    InsufficientHistoryError,
    FileNotFoundError,
)
_CONFIG_ERRORS = (ConfigError, PipelineError, GeneratorError, EvaluationError)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _DATA_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except _CONFIG_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
