"""Constraint-based selection of outlier-score thresholds.

The selector walks candidate thresholds from strictest to loosest. At each
candidate it forms the induced outlier set (scores strictly beyond the
candidate), collapses consecutive runs to single occurrences, and counts how
often each temporal gap recurs between occurrences. The walk stops at the
first candidate whose outlier set either repeats some gap more often than
``periodicity_limit`` or covers more than ``proportion_limit`` of the window;
the previous candidate is the selected threshold. Periodic or over-frequent
deviations are thereby never labeled anomalous.

The walk is implemented incrementally: loosening the threshold only ever
grows the outlier set, so runs and the gap histogram are updated with the
delta instead of being recomputed. This keeps selection near-linearithmic on
realistic windows (see ``benchmarks`` in the CLI).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import (
    BucketGranularity,
    ScoreSeries,
    Tail,
    ThresholdConfig,
)


class SelectionError(ValueError):
    """Threshold selection was asked to run on unusable input."""


@dataclass(frozen=True)
class ThresholdDecision:
    """A selected threshold plus the statistics of its own outlier set.

    ``outlier_count`` and ``max_diff_frequency`` describe the set induced by
    ``threshold`` on the window it was fit on, so a consumer can audit that
    the constraints held at selection time. ``candidates_examined`` counts
    loop iterations, including the violating candidate when the walk stopped
    early.
    """

    threshold: float
    tail: Tail
    outlier_count: int
    outlier_fraction: float
    max_diff_frequency: int
    candidates_examined: int


@dataclass(frozen=True)
class ConstraintStatus:
    """Outcome of checking one outlier set against both constraints.

    ``violating_diff`` is the (gap, frequency) pair with the highest
    frequency among offending gaps, present exactly when ``periodicity_ok``
    is false.
    """

    proportion_ok: bool
    periodicity_ok: bool
    violating_diff: tuple[int, int] | None = None

    @property
    def ok(self) -> bool:
        return self.proportion_ok and self.periodicity_ok


def collapse_consecutive_runs(indices) -> np.ndarray:
    """Reduce each maximal run of consecutive indices to its first index.

    A sustained excursion spanning adjacent points is one event, not many;
    keeping one representative per run stops a long run from flooding the
    gap histogram. Input must be strictly increasing.
    """
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        return idx
    if idx.size > 1 and not np.all(np.diff(idx) > 0):
        raise ValueError("indices must be strictly increasing")
    keep = np.empty(idx.size, dtype=bool)
    keep[0] = True
    np.not_equal(idx[1:], idx[:-1] + 1, out=keep[1:])
    return idx[keep]


def temporal_diff_histogram(
    representative_indices,
    start: int,
    interval: int,
    granularity: BucketGranularity,
) -> dict[int, int]:
    """Frequency of each positive pairwise time-bucket gap.

    Each representative index maps to the bucket of its timestamp; all
    ordered pairs (i < j) contribute ``bucket[j] - bucket[i]``. Zero gaps
    (two events inside one bucket) are excluded: a zero gap is not a period.
    Quadratic in the number of representatives.
    """
    idx = np.asarray(representative_indices, dtype=np.int64)
    if idx.size < 2:
        return {}
    if not np.all(np.diff(idx) > 0):
        raise ValueError("indices must be strictly increasing")
    buckets = (start + idx * interval) // granularity.seconds
    ii, jj = np.triu_indices(len(buckets), k=1)
    diffs = buckets[jj] - buckets[ii]
    diffs = diffs[diffs > 0]
    if diffs.size == 0:
        return {}
    vals, counts = np.unique(diffs, return_counts=True)
    return {int(v): int(c) for v, c in zip(vals, counts)}


def check_constraints(
    outlier_indices,
    n: int,
    start: int,
    interval: int,
    config: ThresholdConfig,
) -> ConstraintStatus:
    """Evaluate one outlier set against both selection constraints.

    The proportion check counts every outlier point; the periodicity check
    runs on run-collapsed representatives.
    """
    if n < 1:
        raise ValueError("window length must be >= 1")
    idx = np.asarray(outlier_indices, dtype=np.int64)
    proportion_ok = idx.size / n <= config.proportion_limit
    reps = collapse_consecutive_runs(idx)
    hist = temporal_diff_histogram(reps, start, interval, config.granularity)
    violating = None
    periodicity_ok = True
    for diff, freq in hist.items():
        if freq > config.periodicity_limit:
            periodicity_ok = False
            if violating is None or freq > violating[1]:
                violating = (diff, freq)
    return ConstraintStatus(proportion_ok, periodicity_ok, violating)


def label_anomalies(scores: ScoreSeries, threshold: float, tail: Tail) -> np.ndarray:
    """Label points strictly beyond the threshold for the given tail.

    Right tail marks +1 where score > threshold; left tail marks -1 where
    score < threshold. Ties at the threshold are normal, matching the strict
    inequalities used during selection.
    """
    s = scores.scores
    labels = np.zeros(len(s), dtype=np.int64)
    if tail is Tail.RIGHT:
        labels[s > threshold] = 1
    else:
        labels[s < threshold] = -1
    return labels


class _GapHistogram:
    """Pairwise bucket-gap frequencies maintained under single adds/removes.

    Representatives live on the integer bucket range [0, size). With counts
    ``c`` per bucket, the histogram is ``hist[d] = sum_b c[b] * c[b + d]``
    for d >= 1, so inserting or deleting one representative at bucket ``b``
    is two contiguous slice updates against ``c``.
    """

    def __init__(self, size: int):
        self.counts = np.zeros(size, dtype=np.int64)
        self.hist = np.zeros(size, dtype=np.int64)  # index 0 unused

    def add(self, b: int) -> None:
        c, hist = self.counts, self.hist
        if b > 0:
            hist[1 : b + 1] += c[:b][::-1]
        upper = c[b + 1 :]
        if upper.size:
            hist[1 : 1 + upper.size] += upper
        c[b] += 1

    def remove(self, b: int) -> None:
        c, hist = self.counts, self.hist
        c[b] -= 1
        if b > 0:
            hist[1 : b + 1] -= c[:b][::-1]
        upper = c[b + 1 :]
        if upper.size:
            hist[1 : 1 + upper.size] -= upper

    def max_frequency(self) -> int:
        if self.hist.size <= 1:
            return 0
        return int(self.hist[1:].max())


class _OutlierSetEngine:
    """Incremental outlier-set state across a loosening threshold walk.

    Tracks the raw outlier count, the set of consecutive-index runs, and the
    gap histogram over run representatives. Points may arrive in any order;
    runs are merged as unit intervals.
    """

    def __init__(self, buckets: np.ndarray, size: int):
        self._buckets = buckets
        self._run_of_start: dict[int, int] = {}  # run start -> run end
        self._run_of_end: dict[int, int] = {}  # run end -> run start
        self._hist = _GapHistogram(size)
        self.count = 0

    def add(self, i: int) -> None:
        starts, ends = self._run_of_start, self._run_of_end
        buckets, hist = self._buckets, self._hist
        left_start = ends.pop(i - 1, None)
        right_end = starts.pop(i + 1, None)
        if left_start is None and right_end is None:
            starts[i] = i
            ends[i] = i
            hist.add(int(buckets[i]))
        elif left_start is not None and right_end is None:
            starts[left_start] = i
            ends[i] = left_start
            # representative (left_start) unchanged
        elif left_start is None and right_end is not None:
            starts[i] = right_end
            ends[right_end] = i
            if buckets[i] != buckets[i + 1]:
                hist.remove(int(buckets[i + 1]))
                hist.add(int(buckets[i]))
        else:
            # bridging two runs: the right run's representative disappears
            starts[left_start] = right_end
            ends[right_end] = left_start
            hist.remove(int(buckets[i + 1]))
        self.count += 1

    def max_frequency(self) -> int:
        return self._hist.max_frequency()


def _point_buckets(scores: ScoreSeries, granularity: BucketGranularity) -> np.ndarray:
    ts = scores.timestamps()
    buckets = ts // granularity.seconds
    return (buckets - buckets[0]).astype(np.int64)


def _tail_sorted_unique(values: np.ndarray, tail: Tail) -> np.ndarray:
    uniq = np.unique(values)
    return uniq[::-1] if tail is Tail.RIGHT else uniq


def _select(
    scores: ScoreSeries, candidates: np.ndarray, config: ThresholdConfig
) -> ThresholdDecision:
    """Shared walk over a tail-sorted, duplicate-free candidate list."""
    values = scores.scores
    n = len(values)
    right = config.tail is Tail.RIGHT
    order = np.argsort(-values if right else values, kind="stable")
    sorted_vals = values[order]
    buckets = _point_buckets(scores, config.granularity)
    engine = _OutlierSetEngine(buckets, int(buckets[-1]) + 1)

    # boundary of {s > t} (right) or {s < t} (left) as a prefix of the sort
    search_keys = -sorted_vals if right else sorted_vals

    def outlier_prefix(thresh: float) -> int:
        key = -thresh if right else thresh
        return int(np.searchsorted(search_keys, key, side="left"))

    prev: ThresholdDecision | None = None
    examined = 0
    added = 0
    for thresh in candidates:
        examined += 1
        boundary = outlier_prefix(float(thresh))
        if prev is not None and boundary / n > config.proportion_limit:
            # proportion violation is certain; no need to grow the engine
            break
        for i in order[added:boundary]:
            engine.add(int(i))
        added = boundary
        max_freq = engine.max_frequency()
        violated = (
            engine.count / n > config.proportion_limit
            or max_freq > config.periodicity_limit
        )
        if violated:
            if prev is None:
                # the very first candidate violates; per the selection rule it
                # is still returned, with its own (violating) statistics
                prev = ThresholdDecision(
                    threshold=float(thresh),
                    tail=config.tail,
                    outlier_count=engine.count,
                    outlier_fraction=engine.count / n,
                    max_diff_frequency=max_freq,
                    candidates_examined=examined,
                )
            break
        prev = ThresholdDecision(
            threshold=float(thresh),
            tail=config.tail,
            outlier_count=engine.count,
            outlier_fraction=engine.count / n,
            max_diff_frequency=max_freq,
            candidates_examined=examined,
        )
    assert prev is not None
    if prev.candidates_examined != examined:
        prev = replace(prev, candidates_examined=examined)
    return prev


def select_threshold(
    scores: ScoreSeries, config: ThresholdConfig
) -> ThresholdDecision:
    """Select the loosest threshold whose outlier set stays aperiodic and rare.

    Candidates are the unique score values, sorted strictest first
    (descending for the right tail, ascending for the left). The walk stops
    permanently at the first violating candidate, even if a looser one would
    coincidentally satisfy the constraints again, and returns the last
    satisfying candidate. With a single unique value the induced outlier set
    is empty and that value is returned.
    """
    if len(scores) == 0:
        raise SelectionError("cannot select a threshold from an empty window")
    candidates = _tail_sorted_unique(scores.scores, config.tail)
    return _select(scores, candidates, config)


def select_threshold_from_candidates(
    scores: ScoreSeries, candidates, config: ThresholdConfig
) -> ThresholdDecision:
    """Same walk as :func:`select_threshold` over a caller-supplied list.

    The list is deduplicated and tail-sorted first. Passing every unique
    score value reproduces :func:`select_threshold` exactly. Candidate lists
    whose strictest entry already induces a violating outlier set get that
    entry back, statistics included; well-formed peak lists never do.
    """
    if len(scores) == 0:
        raise SelectionError("cannot select a threshold from an empty window")
    cand = np.asarray(candidates, dtype=np.float64)
    if cand.size == 0:
        raise SelectionError("candidate list is empty")
    if not np.all(np.isfinite(cand)):
        raise SelectionError("candidate list contains non-finite values")
    return _select(scores, _tail_sorted_unique(cand, config.tail), config)


@dataclass(frozen=True)
class TwoTailThresholds:
    """Per-tail decisions plus the merged labeling they induce."""

    left: ThresholdDecision
    right: ThresholdDecision
    labels: np.ndarray


def two_tailed_thresholds(
    scores: ScoreSeries,
    left_config: ThresholdConfig,
    right_config: ThresholdConfig,
    left_candidates=None,
    right_candidates=None,
) -> TwoTailThresholds:
    """Run selection independently per tail and merge the labels.

    A point gets -1 where the left threshold fires and +1 where the right
    one fires. Both can only fire together when the left threshold exceeds
    the right one; the tail with the larger score-to-threshold distance wins,
    right on an exact tie.
    """
    if left_config.tail is not Tail.LEFT or right_config.tail is not Tail.RIGHT:
        raise SelectionError("configs must be (left, right) in that order")
    if left_candidates is None:
        left = select_threshold(scores, left_config)
    else:
        left = select_threshold_from_candidates(scores, left_candidates, left_config)
    if right_candidates is None:
        right = select_threshold(scores, right_config)
    else:
        right = select_threshold_from_candidates(
            scores, right_candidates, right_config
        )
    labels = merge_tail_labels(scores.scores, left.threshold, right.threshold)
    return TwoTailThresholds(left=left, right=right, labels=labels)


def merge_tail_labels(
    scores: np.ndarray, left_threshold: float, right_threshold: float
) -> np.ndarray:
    """Merge strict two-sided threshold labels for a score array."""
    s = np.asarray(scores, dtype=np.float64)
    fires_left = s < left_threshold
    fires_right = s > right_threshold
    labels = np.where(fires_right, 1, 0) + np.where(fires_left, -1, 0)
    both = fires_left & fires_right
    if both.any():
        left_dist = np.abs(s - left_threshold)
        right_dist = np.abs(s - right_threshold)
        labels[both] = np.where(left_dist[both] > right_dist[both], -1, 1)
    return labels.astype(np.int64)
