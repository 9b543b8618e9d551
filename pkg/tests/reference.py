"""Independent brute-force reference for threshold selection.

Everything here recomputes from scratch per candidate threshold: outlier
membership by masking, run collapse by first differences, gap frequencies by
a full pairwise matrix. No code is shared with the incremental engine under
test, so agreement is meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from kpiguard import BucketGranularity, ScoreSeries, Tail, ThresholdConfig


@dataclass(frozen=True)
class OracleDecision:
    threshold: float
    outlier_count: int
    max_diff_frequency: int
    candidates_examined: int
    outlier_indices: np.ndarray


def _collapse_first_of_runs(idx: np.ndarray) -> np.ndarray:
    if idx.size == 0:
        return idx
    keep = np.ones(idx.size, dtype=bool)
    keep[1:] = idx[1:] != idx[:-1] + 1
    return idx[keep]


def _max_gap_frequency(
    reps: np.ndarray, start: int, interval: int, granularity: BucketGranularity
) -> int:
    if reps.size < 2:
        return 0
    buckets = (start + reps * interval) // granularity.seconds
    diffs = buckets[None, :] - buckets[:, None]
    diffs = diffs[np.triu_indices(len(buckets), k=1)]
    diffs = diffs[diffs > 0]
    if diffs.size == 0:
        return 0
    _, counts = np.unique(diffs, return_counts=True)
    return int(counts.max())


def oracle_select(scores: ScoreSeries, config: ThresholdConfig) -> OracleDecision:
    """Walk every unique threshold in tail order, stopping at first violation."""
    values = scores.scores
    n = len(values)
    uniq = np.unique(values)
    candidates = uniq[::-1] if config.tail is Tail.RIGHT else uniq
    best = None
    examined = 0
    for thresh in candidates:
        examined += 1
        mask = values > thresh if config.tail is Tail.RIGHT else values < thresh
        idx = np.flatnonzero(mask)
        reps = _collapse_first_of_runs(idx)
        max_freq = _max_gap_frequency(
            reps, scores.start, scores.interval, config.granularity
        )
        current = OracleDecision(
            threshold=float(thresh),
            outlier_count=len(idx),
            max_diff_frequency=max_freq,
            candidates_examined=examined,
            outlier_indices=idx,
        )
        violated = (
            len(idx) / n > config.proportion_limit
            or max_freq > config.periodicity_limit
        )
        if violated:
            if best is None:
                best = current
            break
        best = current
    assert best is not None
    if best.candidates_examined != examined:
        best = OracleDecision(
            threshold=best.threshold,
            outlier_count=best.outlier_count,
            max_diff_frequency=best.max_diff_frequency,
            candidates_examined=examined,
            outlier_indices=best.outlier_indices,
        )
    return best


def random_instance(rng: np.random.Generator, max_n: int = 200):
    """One random selection problem: scores, axis, config.

    Mixes continuous, heavily tied, and planted-periodic score patterns so
    tie groups, run collapsing, and both constraint paths all get exercised.
    """
    n = int(rng.integers(1, max_n + 1))
    kind = rng.integers(0, 4)
    if kind == 0:
        values = rng.normal(0, 1, n)
    elif kind == 1:
        values = rng.integers(-4, 5, n).astype(float)
    elif kind == 2:
        values = np.round(rng.normal(0, 2, n), 1)
    else:
        # planted periodic spikes on a quiet floor
        values = rng.normal(0, 0.1, n)
        period = int(rng.integers(4, 30))
        values[:: period] += float(rng.uniform(3, 8))
    interval = int(rng.choice([300, 900, 3600, 7200]))
    start = int(rng.integers(0, 10**7))
    tail = Tail.RIGHT if rng.integers(0, 2) else Tail.LEFT
    if rng.integers(0, 2):
        granularity = BucketGranularity()
    else:
        granularity = BucketGranularity.multi_hour(int(rng.choice([1, 2, 6, 12])))
    config = ThresholdConfig(
        tail,
        periodicity_limit=int(rng.integers(1, 6)),
        proportion_limit=float(rng.uniform(0.005, 0.49)),
        granularity=granularity,
    )
    return ScoreSeries(start, interval, values), config
