import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kpiguard import (
    BucketGranularity,
    ScoreSeries,
    Tail,
    ThresholdConfig,
    check_constraints,
    collapse_consecutive_runs,
    label_anomalies,
    select_threshold,
    select_threshold_from_candidates,
    temporal_diff_histogram,
    two_tailed_thresholds,
)
from kpiguard.thresholding import SelectionError

from reference import oracle_select, random_instance

HOUR = 3600


def hourly_scores(values) -> ScoreSeries:
    return ScoreSeries(0, HOUR, np.asarray(values, dtype=float))


def noon_spike_week(spike=5.0, days=7, spike_days=None) -> ScoreSeries:
    values = np.ones(days * 24)
    for day in spike_days if spike_days is not None else range(days):
        values[day * 24 + 12] = spike
    return hourly_scores(values)


class TestCollapseRuns:
    def test_single(self):
        assert list(collapse_consecutive_runs([3])) == [3]

    def test_runs(self):
        assert list(collapse_consecutive_runs([4, 5, 6, 10])) == [4, 10]

    def test_empty(self):
        assert list(collapse_consecutive_runs([])) == []

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            collapse_consecutive_runs([5, 4])

    @given(st.sets(st.integers(min_value=0, max_value=500), max_size=60))
    def test_one_representative_per_run(self, idx_set):
        idx = sorted(idx_set)
        reps = list(collapse_consecutive_runs(idx))
        # every representative begins a run: predecessor absent
        assert all(r - 1 not in idx_set for r in reps)
        # count of runs = count of gap starts
        expected = sum(1 for i in idx if i - 1 not in idx_set)
        assert len(reps) == expected


class TestDiffHistogram:
    def test_three_consecutive_days(self):
        reps = [0, 24, 48]  # hourly axis: days 0, 1, 2
        assert temporal_diff_histogram(reps, 0, HOUR, BucketGranularity.day()) == {
            1: 2,
            2: 1,
        }

    def test_single_representative(self):
        assert temporal_diff_histogram([5], 0, HOUR, BucketGranularity.day()) == {}

    def test_same_bucket_zero_diff_excluded(self):
        assert temporal_diff_histogram([1, 2], 0, HOUR, BucketGranularity.day()) == {}

    def test_week_of_noon_spikes(self):
        reps = [d * 24 + 12 for d in range(7)]
        hist = temporal_diff_histogram(reps, 0, HOUR, BucketGranularity.day())
        assert hist == {1: 6, 2: 5, 3: 4, 4: 3, 5: 2, 6: 1}

    def test_multi_hour_granularity(self):
        reps = [0, 6, 13]  # hours 0, 6, 13 -> 6h buckets 0, 1, 2
        hist = temporal_diff_histogram(reps, 0, HOUR, BucketGranularity.multi_hour(6))
        assert hist == {1: 2, 2: 1}


class TestCheckConstraints:
    def test_no_outliers_both_ok(self):
        status = check_constraints([], 100, 0, HOUR, ThresholdConfig(Tail.RIGHT))
        assert status.proportion_ok and status.periodicity_ok
        assert status.violating_diff is None

    def test_proportion_violation(self):
        cfg = ThresholdConfig(Tail.RIGHT, proportion_limit=0.01)
        status = check_constraints([10, 40, 70], 100, 0, HOUR, cfg)
        assert not status.proportion_ok

    def test_periodicity_violation_reports_top_offender(self):
        cfg = ThresholdConfig(Tail.RIGHT, periodicity_limit=3, proportion_limit=0.1)
        reps = [d * 24 + 12 for d in range(7)]
        status = check_constraints(reps, 7 * 24, 0, HOUR, cfg)
        assert not status.periodicity_ok
        assert status.violating_diff == (1, 6)

    def test_runs_collapsed_before_histogram(self):
        # a 3-point run and one lone point: one gap only, frequency 1
        cfg = ThresholdConfig(Tail.RIGHT, periodicity_limit=1, proportion_limit=0.4)
        status = check_constraints([24, 25, 26, 48], 96, 0, HOUR, cfg)
        assert status.periodicity_ok


class TestLabelAnomalies:
    def test_right_strict(self):
        s = hourly_scores([1, 1, 9])
        assert list(label_anomalies(s, 1.0, Tail.RIGHT)) == [0, 0, 1]

    def test_threshold_at_max_labels_nothing(self):
        s = hourly_scores([1, 5, 9])
        assert list(label_anomalies(s, 9.0, Tail.RIGHT)) == [0, 0, 0]

    def test_left_mirror(self):
        s = hourly_scores([-9, 1, 1])
        assert list(label_anomalies(s, 1.0, Tail.LEFT)) == [-1, 0, 0]


class TestSelectThreshold:
    def test_all_equal_scores(self):
        s = hourly_scores(np.full(24, 7.0))
        d = select_threshold(s, ThresholdConfig(Tail.RIGHT, proportion_limit=0.2))
        assert d.threshold == 7.0
        assert d.outlier_count == 0
        assert d.candidates_examined == 1

    def test_single_spike_window(self):
        s = hourly_scores([1, 1, 1, 1, 9, 1, 1, 1, 1, 1])
        cfg = ThresholdConfig(Tail.RIGHT, periodicity_limit=2, proportion_limit=0.2)
        d = select_threshold(s, cfg)
        assert d.threshold == 1.0
        labels = label_anomalies(s, d.threshold, Tail.RIGHT)
        assert list(np.flatnonzero(labels)) == [4]
        assert d.outlier_fraction == pytest.approx(0.1)

    def test_periodic_spikes_suppressed(self):
        s = noon_spike_week()
        cfg = ThresholdConfig(Tail.RIGHT, periodicity_limit=3, proportion_limit=0.1)
        d = select_threshold(s, cfg)
        assert d.threshold == 5.0
        assert d.outlier_count == 0
        assert np.all(label_anomalies(s, d.threshold, Tail.RIGHT) == 0)

    def test_aperiodic_spikes_all_flagged(self):
        # pairwise day gaps of a Sidon set never repeat
        s = noon_spike_week(days=31, spike_days=(0, 1, 3, 7, 12, 20, 30))
        cfg = ThresholdConfig(Tail.RIGHT, periodicity_limit=3, proportion_limit=0.1)
        d = select_threshold(s, cfg)
        assert d.threshold == 1.0
        assert int(np.sum(label_anomalies(s, d.threshold, Tail.RIGHT))) == 7

    def test_empty_window_rejected(self):
        with pytest.raises(SelectionError):
            select_threshold(
                ScoreSeries(0, HOUR, np.zeros(0)), ThresholdConfig(Tail.RIGHT)
            )

    def test_left_tail_mirror_of_right(self):
        rng = np.random.default_rng(1)
        vals = rng.normal(0, 1, 200)
        right = select_threshold(
            hourly_scores(vals), ThresholdConfig(Tail.RIGHT, proportion_limit=0.05)
        )
        left = select_threshold(
            hourly_scores(-vals), ThresholdConfig(Tail.LEFT, proportion_limit=0.05)
        )
        assert left.threshold == -right.threshold
        assert left.outlier_count == right.outlier_count

    def test_determinism(self):
        s, cfg = random_instance(np.random.default_rng(77))
        a = select_threshold(s, cfg)
        b = select_threshold(s, cfg)
        assert a == b


class TestOracleAgreement:
    def test_matches_bruteforce_on_random_instances(self):
        rng = np.random.default_rng(2024)
        for _ in range(150):
            s, cfg = random_instance(rng)
            got = select_threshold(s, cfg)
            want = oracle_select(s, cfg)
            assert got.threshold == want.threshold
            assert got.outlier_count == want.outlier_count
            assert got.max_diff_frequency == want.max_diff_frequency
            assert got.candidates_examined == want.candidates_examined

    def test_outlier_growth_monotone_along_walk(self):
        # loosening the threshold only ever grows the outlier set
        rng = np.random.default_rng(5)
        for _ in range(20):
            s, cfg = random_instance(rng)
            vals = s.scores
            uniq = np.unique(vals)
            cands = uniq[::-1] if cfg.tail is Tail.RIGHT else uniq
            prev: set[int] = set()
            for t in cands[:40]:
                mask = vals > t if cfg.tail is Tail.RIGHT else vals < t
                current = set(np.flatnonzero(mask).tolist())
                assert prev.issubset(current)
                prev = current


class TestProportionSafety:
    def test_fraction_never_exceeds_limit(self):
        rng = np.random.default_rng(99)
        for _ in range(200):
            s, cfg = random_instance(rng)
            d = select_threshold(s, cfg)
            labels = label_anomalies(s, d.threshold, cfg.tail)
            assert np.sum(labels != 0) / len(s) <= cfg.proportion_limit


class TestCandidateSelection:
    def test_all_unique_scores_reproduces_plain_selection(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            s, cfg = random_instance(rng)
            via_candidates = select_threshold_from_candidates(
                s, np.unique(s.scores), cfg
            )
            plain = select_threshold(s, cfg)
            assert via_candidates == plain

    def test_restricted_candidates(self):
        s = hourly_scores([1, 1, 1, 1, 9, 1, 1, 1, 1, 1])
        cfg = ThresholdConfig(Tail.RIGHT, periodicity_limit=2, proportion_limit=0.2)
        d = select_threshold_from_candidates(s, [9.0, 1.0], cfg)
        assert d.threshold == 1.0

    def test_max_only_candidate(self):
        s = hourly_scores([1, 2, 3, 9])
        cfg = ThresholdConfig(Tail.RIGHT, proportion_limit=0.4)
        d = select_threshold_from_candidates(s, [9.0], cfg)
        assert d.threshold == 9.0
        assert d.outlier_count == 0

    def test_duplicate_candidates_deduplicated(self):
        s = hourly_scores([1, 2, 3, 9])
        cfg = ThresholdConfig(Tail.RIGHT, proportion_limit=0.4)
        a = select_threshold_from_candidates(s, [9.0, 9.0, 1.0, 1.0], cfg)
        b = select_threshold_from_candidates(s, [9.0, 1.0], cfg)
        assert a == b

    def test_empty_candidates_rejected(self):
        s = hourly_scores([1.0, 2.0])
        with pytest.raises(SelectionError):
            select_threshold_from_candidates(s, [], ThresholdConfig(Tail.RIGHT))

    def test_first_candidate_violating_is_returned_with_its_stats(self):
        # selection loop semantics: the initial candidate stands even when
        # its own outlier set violates, and the stats say so
        s = hourly_scores([1, 2, 3, 4, 5, 6, 7, 8, 9, 10])
        cfg = ThresholdConfig(Tail.RIGHT, proportion_limit=0.2)
        d = select_threshold_from_candidates(s, [1.0], cfg)
        assert d.threshold == 1.0
        assert d.outlier_count == 9
        assert d.outlier_fraction > cfg.proportion_limit


class TestTwoTailed:
    def test_symmetric_spikes(self):
        s = hourly_scores([-9, 0, 0, 0, 9])
        left = ThresholdConfig(Tail.LEFT, proportion_limit=0.3)
        right = ThresholdConfig(Tail.RIGHT, proportion_limit=0.3)
        result = two_tailed_thresholds(s, left, right)
        assert list(result.labels) == [-1, 0, 0, 0, 1]

    def test_all_equal_all_normal(self):
        s = hourly_scores(np.full(10, 3.0))
        result = two_tailed_thresholds(
            s,
            ThresholdConfig(Tail.LEFT, proportion_limit=0.3),
            ThresholdConfig(Tail.RIGHT, proportion_limit=0.3),
        )
        assert np.all(result.labels == 0)

    def test_right_only_spike_leaves_left_quiet(self):
        s = hourly_scores([0, 0, 0, 0, 9, 0, 0, 0, 0, 0])
        result = two_tailed_thresholds(
            s,
            ThresholdConfig(Tail.LEFT, proportion_limit=0.3),
            ThresholdConfig(Tail.RIGHT, proportion_limit=0.3),
        )
        assert list(np.flatnonzero(result.labels == 1)) == [4]
        assert not np.any(result.labels == -1)

    def test_swapped_configs_rejected(self):
        s = hourly_scores([1.0, 2.0])
        cfg_l = ThresholdConfig(Tail.LEFT)
        cfg_r = ThresholdConfig(Tail.RIGHT)
        with pytest.raises(SelectionError):
            two_tailed_thresholds(s, cfg_r, cfg_l)
