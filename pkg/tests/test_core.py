import numpy as np
import pytest
from hypothesis import given, strategies as st

from kpiguard import (
    BucketGranularity,
    ConfigError,
    EmptySeriesError,
    IntervalError,
    NonFiniteValueError,
    ScoreSeries,
    Tail,
    ThresholdConfig,
    TimeSeries,
    bucket_index,
    iqr,
    linear_quantile,
    validate_series,
)


class TestBucketIndex:
    def test_epoch_day_zero(self):
        # 1970-01-01T05:00Z
        assert bucket_index(5 * 3600, BucketGranularity.day()) == 0

    def test_exact_day_boundary(self):
        assert bucket_index(86400, BucketGranularity.day()) == 1

    def test_multi_hour(self):
        # 13:30 into a 6h grid: 13.5h / 6h = 2.25 -> 2
        t = 13 * 3600 + 30 * 60
        assert bucket_index(t, BucketGranularity.multi_hour(6)) == 2

    def test_negative_timestamps_floor(self):
        assert bucket_index(-1, BucketGranularity.day()) == -1

    @given(
        st.integers(min_value=-(10**9), max_value=10**9),
        st.integers(min_value=0, max_value=10**6),
        st.sampled_from([None, 1, 2, 3, 4, 6, 8, 12, 24]),
    )
    def test_monotone(self, t, delta, hours):
        g = BucketGranularity(hours)
        assert bucket_index(t, g) <= bucket_index(t + delta, g)

    def test_invalid_hours(self):
        for h in (0, 5, 7, 25, -3):
            with pytest.raises(ConfigError):
                BucketGranularity.multi_hour(h)


class TestValidateSeries:
    def test_valid(self):
        s = validate_series(0, 900, [1.0, 2.0])
        assert len(s) == 2
        assert s.values.dtype == np.float64

    def test_empty(self):
        with pytest.raises(EmptySeriesError):
            validate_series(0, 900, [])

    def test_non_positive_interval(self):
        with pytest.raises(IntervalError):
            validate_series(0, 0, [1.0])
        with pytest.raises(IntervalError):
            validate_series(0, -900, [1.0])

    def test_non_finite_names_first_index(self):
        with pytest.raises(NonFiniteValueError) as e:
            validate_series(0, 900, [1.0, np.nan])
        assert e.value.index == 1
        with pytest.raises(NonFiniteValueError) as e:
            validate_series(0, 900, [np.inf, np.nan, 1.0])
        assert e.value.index == 0


class TestTimeSeries:
    def test_axis_arithmetic_exact(self):
        s = TimeSeries(1000, 900, np.zeros(50))
        for i in range(0, 50, 7):
            for j in range(0, 50, 11):
                assert s.timestamp_of(i) - s.timestamp_of(j) == (i - j) * 900

    def test_values_read_only(self):
        s = TimeSeries(0, 900, np.ones(3))
        with pytest.raises(ValueError):
            s.values[0] = 2.0

    def test_slice_keeps_axis(self):
        s = TimeSeries(0, 900, np.arange(10.0))
        sub = s.slice(3, 7)
        assert sub.start == 2700
        assert list(sub.values) == [3.0, 4.0, 5.0, 6.0]

    def test_span(self):
        s = TimeSeries(0, 900, np.zeros(96))
        assert s.span_seconds == 96 * 900
        assert s.end == 95 * 900


class TestScoreSeries:
    def test_rejects_non_finite(self):
        with pytest.raises(NonFiniteValueError):
            ScoreSeries(0, 900, [0.0, np.inf])

    def test_for_series_checks_length(self):
        s = TimeSeries(0, 900, np.zeros(4))
        with pytest.raises(ValueError):
            ScoreSeries.for_series(s, [1.0, 2.0])


class TestThresholdConfig:
    def test_defaults(self):
        cfg = ThresholdConfig(Tail.RIGHT)
        assert cfg.periodicity_limit == 3
        assert cfg.proportion_limit == 0.01
        assert cfg.granularity.hours is None

    def test_invariants(self):
        with pytest.raises(ConfigError):
            ThresholdConfig(Tail.LEFT, periodicity_limit=0)
        with pytest.raises(ConfigError):
            ThresholdConfig(Tail.LEFT, proportion_limit=0.0)
        with pytest.raises(ConfigError):
            ThresholdConfig(Tail.LEFT, proportion_limit=0.5)
        with pytest.raises(ConfigError):
            ThresholdConfig("right")


class TestQuantiles:
    def test_linear_interpolation_rule(self):
        vals = [10.0, 20.0, 30.0, 40.0]
        assert linear_quantile(vals, 0.25) == pytest.approx(17.5)
        assert linear_quantile(vals, 0.5) == pytest.approx(25.0)
        assert linear_quantile(vals, 0.75) == pytest.approx(32.5)

    def test_iqr(self):
        assert iqr([10.0, 20.0, 30.0, 40.0]) == pytest.approx(15.0)
        assert iqr([5.0, 5.0, 5.0]) == 0.0
