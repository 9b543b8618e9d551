"""CSV ingestion/emission and a deterministic synthetic KPI generator.

The CSV schema is ``timestamp,value[,label]`` with a required header,
ISO-8601 UTC or epoch-second timestamps (auto-detected per file), and strict
regular cadence. Labels are -1/0/+1.

The generator produces two KPI families. Seasonal series follow an
hourly-stepped daily sinusoid scaled by a weekday/weekend factor; stochastic
series sit on a flat level with heavy, bursty deviations and no seasonality.
Both carry hour-balanced noise: magnitudes are drawn per hour and emitted as
+/- pairs, clamped to a fixed operating ceiling. Balancing makes every
weekday/slot bucket median equal the deterministic profile exactly, and the
ceiling gives the clean signal a hard extreme that recurs in any window, so
injected anomalies are separable from clean extremes by construction rather
than by luck. Injected anomalies are rare, non-adjacent, and
rejection-sampled to stay aperiodic, so a periodicity-filtering detector has
no legitimate reason to suppress them.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

import numpy as np

from .core import DAY_SECONDS, HOUR_SECONDS, TimeSeries, iqr, validate_series

GENERATOR_EPOCH = 1704067200  # 2024-01-01T00:00:00Z, a Monday

_SPLIT_DAY_RATIO = (28, 31, 30)


class DataError(ValueError):
    """Input data violates the declared file contract."""


class CadenceError(DataError):
    """Timestamps do not advance by one interval per row."""


class GeneratorError(ValueError):
    """A synthetic spec cannot be realized."""


@dataclass(frozen=True)
class SplitRange:
    """Half-open timestamp range [start, end)."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.end <= self.start:
            raise ValueError(f"empty split range [{self.start}, {self.end})")


@dataclass(frozen=True)
class Splits:
    """Ordered, disjoint train/validation/test time ranges."""

    train: SplitRange
    val: SplitRange
    test: SplitRange

    def __post_init__(self) -> None:
        if not (self.train.end <= self.val.start and self.val.end <= self.test.start):
            raise ValueError("splits must be disjoint and ordered train < val < test")


@dataclass(frozen=True)
class LabeledDataset:
    """A KPI series with aligned ground-truth labels and optional splits."""

    kpi_id: str
    series: TimeSeries
    labels: np.ndarray
    splits: Splits | None = None

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels, dtype=np.int64)
        if len(labels) != len(self.series):
            raise ValueError(
                f"labels length {len(labels)} != series length {len(self.series)}"
            )
        bad = ~np.isin(labels, (-1, 0, 1))
        if bad.any():
            raise ValueError(f"invalid label at index {int(np.flatnonzero(bad)[0])}")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    def index_range(self, split: SplitRange) -> tuple[int, int]:
        """Series index range [lo, hi) covered by a split."""
        s = self.series
        lo = max(0, math.ceil((split.start - s.start) / s.interval))
        hi = min(len(s), math.ceil((split.end - s.start) / s.interval))
        return lo, hi


def _parse_timestamp_iso(text: str) -> int:
    dt = datetime.strptime(text, "%Y-%m-%dT%H:%M:%SZ")
    return int(dt.replace(tzinfo=timezone.utc).timestamp())


def _format_timestamp_iso(t: int) -> str:
    return datetime.fromtimestamp(t, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def read_csv(
    path,
    kpi_id: str | None = None,
    splits: Splits | None = None,
    timestamp_col: str = "timestamp",
    value_col: str = "value",
    label_col: str = "label",
) -> LabeledDataset:
    """Load a labeled KPI series from CSV, validating cadence row by row.

    The timestamp format (epoch seconds or ISO-8601 Z) is detected from the
    first data row and then required for the whole file. A missing label
    column means all points are normal. Errors name the offending line
    (header is line 1). Gapped or irregular cadence is rejected; fill or
    drop rows upstream.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, header required") from None
        header = [h.strip() for h in header]
        for required in (timestamp_col, value_col):
            if required not in header:
                raise DataError(f"{path}: missing required column '{required}'")
        t_i = header.index(timestamp_col)
        v_i = header.index(value_col)
        l_i = header.index(label_col) if label_col in header else None

        timestamps: list[int] = []
        values: list[float] = []
        labels: list[int] = []
        epoch_format: bool | None = None
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(
                    f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}"
                )
            raw_t = row[t_i].strip()
            if epoch_format is None:
                epoch_format = raw_t.lstrip("-").isdigit()
            try:
                t = int(raw_t) if epoch_format else _parse_timestamp_iso(raw_t)
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed timestamp {raw_t!r}") from None
            try:
                v = float(row[v_i])
            except ValueError:
                raise DataError(
                    f"{path}:{lineno}: malformed value {row[v_i]!r}"
                ) from None
            if l_i is not None:
                try:
                    lab = int(row[l_i])
                except ValueError:
                    raise DataError(
                        f"{path}:{lineno}: malformed label {row[l_i]!r}"
                    ) from None
                if lab not in (-1, 0, 1):
                    raise DataError(f"{path}:{lineno}: unknown label {lab}")
                labels.append(lab)
            timestamps.append(t)
            values.append(v)

    if len(timestamps) < 1:
        raise DataError(f"{path}: no data rows")
    if len(timestamps) >= 2:
        interval = timestamps[1] - timestamps[0]
        if interval <= 0:
            raise CadenceError(f"{path}: timestamps not increasing at line 3")
        for k in range(2, len(timestamps)):
            expected = timestamps[0] + k * interval
            if timestamps[k] != expected:
                raise CadenceError(
                    f"{path}:{k + 2}: expected timestamp "
                    f"{_format_timestamp_iso(expected)} ({expected}), got "
                    f"{timestamps[k]} (gap or irregular cadence)"
                )
    else:
        interval = 900
    series = validate_series(timestamps[0], interval, values)
    label_arr = np.array(labels if l_i is not None else [0] * len(values), dtype=np.int64)
    return LabeledDataset(
        kpi_id=kpi_id if kpi_id is not None else path.stem,
        series=series,
        labels=label_arr,
        splits=splits,
    )


def write_csv(dataset: LabeledDataset, path, iso_timestamps: bool = True) -> None:
    """Write a dataset as ``timestamp,value,label`` with LF endings.

    Values use Python's shortest round-trip float representation, so a
    read_csv of the output reproduces the dataset exactly.
    """
    path = Path(path)
    ts = dataset.series.timestamps()
    with path.open("w", newline="\n", encoding="utf-8") as fh:
        fh.write("timestamp,value,label\n")
        for t, v, lab in zip(ts, dataset.series.values, dataset.labels):
            stamp = _format_timestamp_iso(int(t)) if iso_timestamps else str(int(t))
            fh.write(f"{stamp},{float(v)!r},{int(lab)}\n")


class Family(Enum):
    SEASONAL = "seasonal"
    STOCHASTIC = "stochastic"


class TailMode(Enum):
    LEFT = "left"
    RIGHT = "right"
    BOTH = "both"


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of one synthetic KPI.

    ``anomaly_magnitude`` is a multiplier of the clean signal's residual
    IQR; it must stay above 3 so injected points are unambiguous.
    ``anomaly_rate`` must stay below the proportion limits any evaluation
    would use (0.005 at the strict end), or the injected anomalies would
    themselves breach the rarity assumption they are meant to test.
    """

    family: Family
    seed: int
    interval: int = 900
    span: int = 89 * DAY_SECONDS
    anomaly_rate: float = 0.003
    anomaly_magnitude: float = 8.0
    tails: TailMode = TailMode.BOTH
    base_level: float = 120.0
    amplitude: float = 45.0
    weekend_factor: float = 0.55
    noise_scale: float = 8.0

    def __post_init__(self) -> None:
        if self.interval <= 0 or HOUR_SECONDS % self.interval != 0:
            raise GeneratorError(
                f"interval must divide one hour, got {self.interval}"
            )
        if HOUR_SECONDS // self.interval < 2:
            raise GeneratorError(
                "need at least 2 points per hour for balanced noise; "
                f"interval {self.interval} gives fewer"
            )
        if self.span % HOUR_SECONDS != 0:
            raise GeneratorError(f"span must be whole hours, got {self.span}")
        if not 0.0 <= self.anomaly_rate < 0.005:
            raise GeneratorError(
                "anomaly_rate must stay below evaluation proportion limits "
                f"(< 0.005), got {self.anomaly_rate}"
            )
        if self.anomaly_magnitude <= 3.0:
            raise GeneratorError(
                f"anomaly_magnitude must exceed 3, got {self.anomaly_magnitude}"
            )
        if self.noise_scale <= 0 or self.amplitude < 0:
            raise GeneratorError("noise_scale must be positive, amplitude >= 0")
        if max(abs(self.base_level), self.amplitude, self.noise_scale) >= 1e6:
            # keeps every quantized value exactly representable in float64
            raise GeneratorError("signal parameters must stay below 1e6")


# clip points of the two noise shapes, in standard-normal units
_SEASONAL_CLIP_Z = 2.0
_STOCHASTIC_CLIP_Z = 1.7
_STOCHASTIC_EXP_RATE = 0.7

# Values are quantized to a fine dyadic grid, mimicking the finite reporting
# resolution of real counters. On this grid every profile + noise addition
# is exact in float64, so bucket medians of balanced noise equal the profile
# bit-for-bit and the clamped noise ceiling is one shared float everywhere.
_VALUE_GRID = 2.0**-20


def _quantize(x: np.ndarray) -> np.ndarray:
    return np.round(x / _VALUE_GRID) * _VALUE_GRID

_WINDOW_ANOMALY_CAP = 3  # per rolling 7 days


def _balanced_noise(rng: np.random.Generator, spec: SyntheticSpec, n: int) -> np.ndarray:
    """Per-hour sign-balanced noise, clamped to the family's ceiling.

    Every hour receives magnitude pairs (+m, -m) in shuffled order (plus a
    structural zero when the group size is odd), so the sorted multiset of
    any whole-hour group is symmetric around zero and its median is exactly
    zero. Point marginals follow the family's clipped noise law.
    """
    g = HOUR_SECONDS // spec.interval
    hours = n // g
    k = g // 2
    base = np.abs(rng.standard_normal((hours, k)))
    if spec.family is Family.SEASONAL:
        mags = spec.noise_scale * np.minimum(base, _SEASONAL_CLIP_Z)
    else:
        mags = spec.noise_scale * (
            np.exp(_STOCHASTIC_EXP_RATE * np.minimum(base, _STOCHASTIC_CLIP_Z)) - 1.0
        )
    mags = _quantize(mags)
    block = np.empty((hours, g))
    block[:, 0:2 * k:2] = mags
    block[:, 1:2 * k:2] = -mags
    if g % 2 == 1:
        block[:, -1] = 0.0
    block = rng.permuted(block, axis=1)
    return block.reshape(-1)


def _seasonal_profile(spec: SyntheticSpec, n: int) -> np.ndarray:
    """Hourly-stepped daily sinusoid scaled per weekday, peaking at noon."""
    g = HOUR_SECONDS // spec.interval
    hours = n // g
    hour_ts = GENERATOR_EPOCH + HOUR_SECONDS * np.arange(hours, dtype=np.int64)
    hod = (hour_ts % DAY_SECONDS) // HOUR_SECONDS
    dow = (hour_ts // DAY_SECONDS + 3) % 7
    weekday_scale = np.where(dow >= 5, spec.weekend_factor, 1.0)
    shape = np.sin(2.0 * np.pi * hod / 24.0 - np.pi / 2.0)
    profile_h = _quantize(spec.base_level + spec.amplitude * weekday_scale * shape)
    return np.repeat(profile_h, g)


def _anomaly_positions(
    rng: np.random.Generator, spec: SyntheticSpec, n: int, count: int
) -> np.ndarray:
    """Sample anomaly indices uniformly subject to a minimum spacing.

    The spacing keeps anomalies non-adjacent, one per hour group, and at
    most _WINDOW_ANOMALY_CAP inside any rolling 7 days. The window cap is
    what matters to a periodicity filter operating on week-scale windows:
    three collapsed events can repeat no temporal gap more than twice, so no
    window ever presents a periodic-looking injected pattern. The draw is
    exactly uniform over all index sets satisfying the spacing (subtract the
    reserved gaps, choose freely, add them back).
    """
    if count == 0:
        return np.empty(0, dtype=np.int64)
    g = HOUR_SECONDS // spec.interval
    window_points = 7 * DAY_SECONDS // spec.interval
    if count <= _WINDOW_ANOMALY_CAP:
        min_gap = g + 1
    else:
        min_gap = -(-window_points // _WINDOW_ANOMALY_CAP)
    reserved = (count - 1) * min_gap
    free = n - reserved
    if free < count:
        raise GeneratorError(
            f"could not place {count} aperiodic anomalies in {n} points; "
            "lower anomaly_rate or lengthen the span"
        )
    base = np.sort(rng.choice(free, size=count, replace=False))
    return (base + min_gap * np.arange(count)).astype(np.int64)


def _make_splits(start: int, span: int) -> Splits:
    days = span // DAY_SECONDS
    total = sum(_SPLIT_DAY_RATIO)
    train_days = round(days * _SPLIT_DAY_RATIO[0] / total)
    val_days = round(days * _SPLIT_DAY_RATIO[1] / total)
    test_days = days - train_days - val_days
    if min(train_days, val_days, test_days) < 1:
        raise GeneratorError(
            f"span of {days} days is too short to carve train/val/test splits"
        )
    t0 = start
    t1 = t0 + train_days * DAY_SECONDS
    t2 = t1 + val_days * DAY_SECONDS
    t3 = t2 + test_days * DAY_SECONDS
    return Splits(
        train=SplitRange(t0, t1), val=SplitRange(t1, t2), test=SplitRange(t2, t3)
    )


def generate_synthetic(spec: SyntheticSpec, kpi_id: str | None = None) -> LabeledDataset:
    """Build one synthetic KPI with injected, labeled anomalies.

    The anomaly count is ``round(anomaly_rate * n)``. At each anomaly the
    whole hour's noise is zeroed (keeping bucket medians exact) and the
    point is displaced by ``anomaly_magnitude`` clean-residual IQRs in the
    chosen direction; its label records the sign. Identical specs produce
    bit-identical datasets.
    """
    n = spec.span // spec.interval
    splits = _make_splits(GENERATOR_EPOCH, spec.span)
    rng = np.random.default_rng(spec.seed)
    noise = _balanced_noise(rng, spec, n)
    if spec.family is Family.SEASONAL:
        profile = _seasonal_profile(spec, n)
    else:
        profile = np.full(n, float(_quantize(np.array([spec.base_level]))[0]))
    clean_iqr = iqr(noise)

    count = round(spec.anomaly_rate * n)
    positions = _anomaly_positions(rng, spec, n, count)
    if spec.tails is TailMode.BOTH:
        signs = rng.integers(0, 2, size=len(positions)) * 2 - 1
    else:
        signs = np.full(len(positions), 1 if spec.tails is TailMode.RIGHT else -1)

    values = profile + noise
    labels = np.zeros(n, dtype=np.int64)
    g = HOUR_SECONDS // spec.interval
    delta = float(_quantize(np.array([spec.anomaly_magnitude * clean_iqr]))[0])
    for p, sign in zip(positions, signs):
        h = int(p) // g
        values[h * g : (h + 1) * g] = profile[h * g : (h + 1) * g]
        values[int(p)] = profile[int(p)] + sign * delta
        labels[int(p)] = sign

    series = TimeSeries(GENERATOR_EPOCH, spec.interval, values)
    name = kpi_id if kpi_id is not None else f"{spec.family.value}-{spec.seed}"
    return LabeledDataset(kpi_id=name, series=series, labels=labels, splits=splits)


def default_suite() -> list[LabeledDataset]:
    """The ten-KPI benchmark suite: six seasonal, four stochastic, seed-fixed."""
    datasets = []
    for i in range(6):
        spec = SyntheticSpec(
            family=Family.SEASONAL,
            seed=11 + i,
            base_level=100.0 + 12.0 * i,
            amplitude=36.0 + 4.0 * i,
            weekend_factor=0.5 + 0.03 * i,
            noise_scale=6.0 + 0.7 * i,
        )
        datasets.append(generate_synthetic(spec, kpi_id=f"seasonal_{i + 1}"))
    for i in range(4):
        spec = SyntheticSpec(
            family=Family.STOCHASTIC,
            seed=31 + i,
            base_level=30.0 + 6.0 * i,
            noise_scale=5.0 + 0.6 * i,
        )
        datasets.append(generate_synthetic(spec, kpi_id=f"stochastic_{i + 1}"))
    return datasets
