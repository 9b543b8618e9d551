"""Seasonal forecasting of KPI series so residuals isolate the unexpected.

The seasonal-quartile forecaster groups observations by (UTC day of week,
time-of-day slot) and predicts each bucket's median. It needs no explicit
trend model, is robust to the very anomalies the pipeline hunts, and its
week-periodic forecast matches the load patterns of daily/weekly operational
metrics. A persistence forecaster is included for signals with no usable
seasonality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DAY_SECONDS,
    HOUR_SECONDS,
    TimeSeries,
    day_of_week,
    second_of_day,
)


class FitError(ValueError):
    """The training window cannot support a seasonal fit."""


def default_slot_seconds(interval: int) -> int:
    """Slot width used when none is given: the interval, floored at 1 hour.

    Coarser-than-interval slots keep every bucket populated from a few weeks
    of data.
    """
    return max(HOUR_SECONDS, interval)


@dataclass(frozen=True)
class SeasonalQuartileModel:
    """Per-(weekday, slot) quartiles of the training window.

    ``q1``, ``median`` and ``q3`` are (7, slots_per_day) arrays. The
    forecast for a timestamp is its bucket's median; the quartiles describe
    the bucket's typical spread and are kept for diagnostics.
    """

    slot_seconds: int
    q1: np.ndarray
    median: np.ndarray
    q3: np.ndarray
    fitted_start: int
    fitted_end: int

    @property
    def slots_per_day(self) -> int:
        return DAY_SECONDS // self.slot_seconds

    def bucket_of(self, t: int) -> tuple[int, int]:
        return day_of_week(t), second_of_day(t) // self.slot_seconds


def fit_seasonal_quartile(
    train: TimeSeries, slot_seconds: int | None = None
) -> SeasonalQuartileModel:
    """Fit per-bucket quartiles over a training window of at least 7 days.

    Quartiles use linear interpolation between order statistics so the fit
    is reproducible to the bit. Every weekday/slot bucket must receive data;
    an empty bucket (slots finer than the sampling cadence, or a short
    window) is an error naming the bucket.
    """
    if slot_seconds is None:
        slot_seconds = default_slot_seconds(train.interval)
    if slot_seconds <= 0 or DAY_SECONDS % slot_seconds != 0:
        raise FitError(f"slot of {slot_seconds}s does not divide a day")
    if train.span_seconds < 7 * DAY_SECONDS:
        raise FitError(
            f"training window spans {train.span_seconds}s, "
            f"need at least 7 days ({7 * DAY_SECONDS}s)"
        )
    slots = DAY_SECONDS // slot_seconds
    ts = train.timestamps()
    dow = (ts // DAY_SECONDS + 3) % 7
    slot = (ts % DAY_SECONDS) // slot_seconds
    flat = dow * slots + slot
    order = np.argsort(flat, kind="stable")
    sorted_values = train.values[order]
    sorted_keys = flat[order]
    boundaries = np.searchsorted(sorted_keys, np.arange(7 * slots + 1))

    q1 = np.empty((7, slots))
    med = np.empty((7, slots))
    q3 = np.empty((7, slots))
    for key in range(7 * slots):
        lo, hi = boundaries[key], boundaries[key + 1]
        if lo == hi:
            raise FitError(
                f"no observations for weekday {key // slots}, slot {key % slots}"
            )
        qs = np.quantile(sorted_values[lo:hi], [0.25, 0.5, 0.75])
        q1[key // slots, key % slots] = qs[0]
        med[key // slots, key % slots] = qs[1]
        q3[key // slots, key % slots] = qs[2]

    for arr in (q1, med, q3):
        arr.setflags(write=False)
    return SeasonalQuartileModel(
        slot_seconds=slot_seconds,
        q1=q1,
        median=med,
        q3=q3,
        fitted_start=train.start,
        fitted_end=train.end,
    )


def forecast(model: SeasonalQuartileModel, t: int) -> float:
    """Expected value at timestamp t: the median of t's bucket."""
    d, s = model.bucket_of(t)
    return float(model.median[d, s])


def _forecast_values(model: SeasonalQuartileModel, series: TimeSeries) -> np.ndarray:
    ts = series.timestamps()
    dow = (ts // DAY_SECONDS + 3) % 7
    slot = (ts % DAY_SECONDS) // model.slot_seconds
    return model.median[dow, slot]


def residuals(series: TimeSeries, model: SeasonalQuartileModel) -> TimeSeries:
    """Observed minus forecast on the same time axis."""
    return TimeSeries(
        series.start, series.interval, series.values - _forecast_values(model, series)
    )


def naive_forecast(series: TimeSeries) -> TimeSeries:
    """Persistence forecast: each point predicts the previous value.

    The first point forecasts itself, so its residual is zero.
    """
    if len(series) == 0:
        raise ValueError("cannot forecast an empty series")
    values = series.values
    fc = np.concatenate(([values[0]], values[:-1]))
    return TimeSeries(series.start, series.interval, fc)


def naive_residuals(series: TimeSeries) -> TimeSeries:
    """Residuals of the persistence forecast: first-order differences."""
    fc = naive_forecast(series)
    return TimeSeries(series.start, series.interval, series.values - fc.values)
