"""Core domain types shared by every stage of the detection pipeline.

Timestamps are UTC epoch seconds throughout; series are equally spaced with
no representable gaps, so every index computation is exact integer
arithmetic. All types here are immutable values and safe to share across
threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum

import numpy as np

DAY_SECONDS = 86400
HOUR_SECONDS = 3600

# 1970-01-01 was a Thursday; offset 3 makes Monday weekday 0, matching
# datetime.weekday().
_EPOCH_WEEKDAY_OFFSET = 3


class ConfigError(ValueError):
    """A configuration value violates its documented invariant."""


class SeriesValidationError(ValueError):
    """Raw series data cannot form a valid TimeSeries."""


class EmptySeriesError(SeriesValidationError):
    """The series has no observations."""


class IntervalError(SeriesValidationError):
    """The sampling interval is not a positive number of seconds."""


class NonFiniteValueError(SeriesValidationError):
    """A value is NaN or infinite; carries the first offending index."""

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"non-finite value at index {index}")


class Tail(Enum):
    """Direction of deviation a threshold guards against."""

    LEFT = "left"
    RIGHT = "right"


class AnomalyLabel(IntEnum):
    """Point labels: -1 left-tailed anomaly, 0 normal, +1 right-tailed."""

    LEFT = -1
    NORMAL = 0
    RIGHT = 1


@dataclass(frozen=True)
class BucketGranularity:
    """Quantization applied to timestamps before temporal differencing.

    ``hours=None`` means whole UTC days; otherwise timestamps are grouped
    into multi-hour blocks. ``hours`` must divide 24 so blocks tile the day.
    """

    hours: int | None = None

    def __post_init__(self) -> None:
        if self.hours is not None:
            if not (1 <= self.hours <= 24) or 24 % self.hours != 0:
                raise ConfigError(
                    f"multi-hour granularity must divide 24, got {self.hours}"
                )

    @property
    def seconds(self) -> int:
        return DAY_SECONDS if self.hours is None else self.hours * HOUR_SECONDS

    @classmethod
    def day(cls) -> "BucketGranularity":
        return cls()

    @classmethod
    def multi_hour(cls, hours: int) -> "BucketGranularity":
        return cls(hours=hours)


def bucket_index(t: int, granularity: BucketGranularity) -> int:
    """Map a UTC timestamp to its bucket ordinal.

    Floor division keeps the mapping monotone, including for timestamps
    before the epoch.
    """
    return int(t) // granularity.seconds


def day_of_week(t: int) -> int:
    """UTC day of week with Monday = 0, as datetime.weekday() reports."""
    return (int(t) // DAY_SECONDS + _EPOCH_WEEKDAY_OFFSET) % 7


def second_of_day(t: int) -> int:
    return int(t) % DAY_SECONDS


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    arr = arr.copy() if arr.base is not None or arr.flags.writeable else arr
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """Equally spaced float observations starting at ``start`` epoch seconds.

    The timestamp of index i is exactly ``start + i * interval``. Use
    :func:`validate_series` when constructing from untrusted data.
    """

    start: int
    interval: int
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _frozen_array(self.values, np.float64))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def end(self) -> int:
        """Timestamp of the last observation."""
        return self.start + (len(self.values) - 1) * self.interval

    @property
    def span_seconds(self) -> int:
        """Total time covered, counting each point as one interval."""
        return len(self.values) * self.interval

    def timestamp_of(self, i: int) -> int:
        return self.start + i * self.interval

    def timestamps(self) -> np.ndarray:
        return self.start + np.arange(len(self.values), dtype=np.int64) * self.interval

    def slice(self, lo: int, hi: int) -> "TimeSeries":
        """Sub-series for index range [lo, hi)."""
        return TimeSeries(self.timestamp_of(lo), self.interval, self.values[lo:hi])


@dataclass(frozen=True)
class ScoreSeries:
    """Per-point outlier scores on the same time axis as their source series."""

    start: int
    interval: int
    scores: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "scores", _frozen_array(self.scores, np.float64))
        if not np.all(np.isfinite(self.scores)):
            idx = int(np.flatnonzero(~np.isfinite(self.scores))[0])
            raise NonFiniteValueError(idx)

    def __len__(self) -> int:
        return len(self.scores)

    def timestamp_of(self, i: int) -> int:
        return self.start + i * self.interval

    def timestamps(self) -> np.ndarray:
        return self.start + np.arange(len(self.scores), dtype=np.int64) * self.interval

    @classmethod
    def for_series(cls, series: TimeSeries, scores) -> "ScoreSeries":
        scores = np.asarray(scores, dtype=np.float64)
        if len(scores) != len(series):
            raise ValueError(
                f"score length {len(scores)} != series length {len(series)}"
            )
        return cls(series.start, series.interval, scores)


def validate_series(start: int, interval: int, values) -> TimeSeries:
    """Checked TimeSeries constructor for untrusted input.

    Rejects a non-positive interval, empty values, and non-finite values;
    each failure raises a distinct error type, and the non-finite error
    names the first offending index.
    """
    if interval <= 0:
        raise IntervalError(f"interval must be positive, got {interval}")
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise SeriesValidationError(f"values must be 1-D, got shape {arr.shape}")
    if arr.size == 0:
        raise EmptySeriesError("series has no values")
    finite = np.isfinite(arr)
    if not finite.all():
        raise NonFiniteValueError(int(np.flatnonzero(~finite)[0]))
    return TimeSeries(int(start), int(interval), arr)


@dataclass(frozen=True)
class ThresholdConfig:
    """Constraints the threshold selector must satisfy.

    periodicity_limit caps how often any one temporal gap may recur among
    outlier occurrences; proportion_limit caps the fraction of the window
    the outliers may cover.
    """

    tail: Tail
    periodicity_limit: int = 3
    proportion_limit: float = 0.01
    granularity: BucketGranularity = field(default_factory=BucketGranularity)

    def __post_init__(self) -> None:
        if not isinstance(self.tail, Tail):
            raise ConfigError(f"tail must be a Tail, got {self.tail!r}")
        if self.periodicity_limit < 1:
            raise ConfigError(
                f"periodicity_limit must be >= 1, got {self.periodicity_limit}"
            )
        if not 0.0 < self.proportion_limit < 0.5:
            raise ConfigError(
                f"proportion_limit must be in (0, 0.5), got {self.proportion_limit}"
            )


def linear_quantile(values, q: float) -> float:
    """Empirical quantile with linear interpolation between order statistics.

    One quantile rule is used everywhere in this package so that results
    from different stages are comparable.
    """
    return float(np.quantile(np.asarray(values, dtype=np.float64), q))


def iqr(values) -> float:
    """Interquartile range under the same linear interpolation rule."""
    arr = np.asarray(values, dtype=np.float64)
    q1, q3 = np.quantile(arr, [0.25, 0.75])
    return float(q3 - q1)
