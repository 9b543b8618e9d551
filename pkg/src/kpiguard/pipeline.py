"""Streaming orchestration: windows, threshold lifecycle, drift recovery.

One PipelineState serves one KPI stream. Warm-up fits the forecaster on a
long window, the scorer and thresholds on a shorter one, and records the
residual operating range. Each step then scores a point against the standing
models and labels it with the standing thresholds; every ``drift_check_every``
points the live windows are re-checked, and a drift trigger recomputes the
thresholds (plus the forecaster and scorer when the range has shrunk).

Distinct streams share no mutable state and may run fully in parallel; steps
within one stream are serialized by the caller.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import (
    ScoreSeries,
    Tail,
    ThresholdConfig,
    TimeSeries,
    iqr,
)
from .detect import DegenerateWindowError, ZScoreModel, fit_zscore, pot_candidates, score_zscore
from .drift import DriftKind, DriftStatus, RangeBaseline, observe_window
from .forecast import (
    SeasonalQuartileModel,
    fit_seasonal_quartile,
    naive_residuals,
    residuals,
)
from .thresholding import (
    TwoTailThresholds,
    merge_tail_labels,
    two_tailed_thresholds,
)

DAY_POINTS_15MIN = 96


class PipelineError(ValueError):
    """The pipeline was configured or fed in a way it cannot handle."""


class InsufficientHistoryError(PipelineError):
    """Warm-up history is shorter than the forecaster window."""


class StreamOrderError(PipelineError):
    """A streamed point is out of order or leaves a gap."""


class ForecasterKind(Enum):
    SEASONAL_QUARTILE = "seasonal_quartile"
    NAIVE = "naive"


class ScorerKind(Enum):
    ZSCORE = "zscore"


class CandidateSource(Enum):
    ALL_SCORES = "all_scores"
    POT_PEAKS = "pot_peaks"


@dataclass(frozen=True)
class PipelineConfig:
    """Window sizes, stage choices and per-tail threshold constraints.

    Windows are durations in seconds; the forecaster window must contain the
    detector window. ``drift_check_every`` counts points between drift
    checks; 0 disables drift checking entirely (useful for reproducing a
    one-shot batch run). ``pot_quantile`` only applies with POT_PEAKS.
    """

    forecaster_window: int = 28 * 86400
    detector_window: int = 7 * 86400
    drift_check_every: int = DAY_POINTS_15MIN
    forecaster: ForecasterKind = ForecasterKind.SEASONAL_QUARTILE
    scorer: ScorerKind = ScorerKind.ZSCORE
    candidate_source: CandidateSource = CandidateSource.ALL_SCORES
    pot_quantile: float = 0.98
    left: ThresholdConfig = field(default_factory=lambda: ThresholdConfig(Tail.LEFT))
    right: ThresholdConfig = field(default_factory=lambda: ThresholdConfig(Tail.RIGHT))
    range_shrink_factor: float = 0.5

    def __post_init__(self) -> None:
        if not 0 < self.detector_window <= self.forecaster_window:
            raise PipelineError(
                "windows must satisfy forecaster_window >= detector_window > 0, "
                f"got {self.forecaster_window} / {self.detector_window}"
            )
        if self.drift_check_every < 0:
            raise PipelineError(
                f"drift_check_every must be >= 0, got {self.drift_check_every}"
            )
        if self.left.tail is not Tail.LEFT or self.right.tail is not Tail.RIGHT:
            raise PipelineError("left/right threshold configs have swapped tails")
        if not 0.0 < self.pot_quantile < 1.0:
            raise PipelineError(f"pot_quantile must be in (0, 1), got {self.pot_quantile}")


@dataclass(frozen=True)
class PointVerdict:
    """Everything the pipeline concluded about one streamed point.

    ``left_threshold``/``right_threshold`` are the score-space thresholds in
    force when the point was labeled. ``drift`` is present only on the steps
    where a drift check ran and triggered.
    """

    timestamp: int
    value: float
    residual: float
    score: float
    label: int
    left_threshold: float
    right_threshold: float
    drift: DriftStatus | None = None


class PipelineState:
    """Mutable per-stream state: models, thresholds, stage windows."""

    def __init__(
        self,
        config: PipelineConfig,
        interval: int,
        stream_id: str | None,
        forecaster_model: SeasonalQuartileModel | None,
        scorer_model: ZScoreModel,
        thresholds: TwoTailThresholds,
        baseline: RangeBaseline,
        raw_values,
        residual_values,
        score_values,
        last_value: float,
        next_timestamp: int,
    ):
        self.config = config
        self.interval = interval
        self.stream_id = stream_id
        self.forecaster_model = forecaster_model
        self.scorer_model = scorer_model
        self.thresholds = thresholds
        self.baseline = baseline
        fc_points = config.forecaster_window // interval
        det_points = config.detector_window // interval
        self._raw = deque(raw_values, maxlen=fc_points)
        self._residuals = deque(residual_values, maxlen=det_points)
        self._scores = deque(score_values, maxlen=det_points)
        self._last_value = last_value
        self.next_timestamp = next_timestamp
        self._points_since_check = 0

    @property
    def left_threshold(self) -> float:
        return self.thresholds.left.threshold

    @property
    def right_threshold(self) -> float:
        return self.thresholds.right.threshold

    def residual_space_thresholds(self) -> tuple[float, float]:
        """Standing thresholds mapped back to residual units.

        Score-space threshold numbers change meaning whenever the scorer is
        refit; comparisons of detection sensitivity across drift events
        should use these.
        """
        m = self.scorer_model
        return (
            m.mu + self.left_threshold * m.sigma,
            m.mu + self.right_threshold * m.sigma,
        )

    def window_sizes(self) -> tuple[int, int, int]:
        """Current (raw, residual, score) window fill levels."""
        return len(self._raw), len(self._residuals), len(self._scores)

    def _forecast_point(self, t: int) -> float:
        if self.forecaster_model is not None:
            d, s = self.forecaster_model.bucket_of(t)
            return float(self.forecaster_model.median[d, s])
        return self._last_value

    def _score_window_series(self) -> ScoreSeries:
        n = len(self._scores)
        start = self.next_timestamp - n * self.interval
        return ScoreSeries(start, self.interval, np.array(self._scores))

    def _residual_window_series(self) -> TimeSeries:
        n = len(self._residuals)
        start = self.next_timestamp - n * self.interval
        return TimeSeries(start, self.interval, np.array(self._residuals))

    def _raw_window_series(self) -> TimeSeries:
        n = len(self._raw)
        start = self.next_timestamp - n * self.interval
        return TimeSeries(start, self.interval, np.array(self._raw))

    def step(self, timestamp: int, value: float) -> PointVerdict:
        return step(self, (timestamp, value))


def _fit_stage_models(
    window: TimeSeries, config: PipelineConfig
) -> tuple[SeasonalQuartileModel | None, TimeSeries]:
    """Fit the configured forecaster and return it with window residuals."""
    if config.forecaster is ForecasterKind.SEASONAL_QUARTILE:
        model = fit_seasonal_quartile(window)
        return model, residuals(window, model)
    return None, naive_residuals(window)


def _select_thresholds(
    scores: ScoreSeries, config: PipelineConfig
) -> TwoTailThresholds:
    if config.candidate_source is CandidateSource.POT_PEAKS:
        left_cand = pot_candidates(scores, config.pot_quantile, Tail.LEFT)
        right_cand = pot_candidates(scores, config.pot_quantile, Tail.RIGHT)
        return two_tailed_thresholds(
            scores, config.left, config.right, left_cand, right_cand
        )
    return two_tailed_thresholds(scores, config.left, config.right)


def warm_up(
    history: TimeSeries, config: PipelineConfig, stream_id: str | None = None
) -> PipelineState:
    """Fit all stages on trailing history and return a ready stream state.

    The forecaster is fit on the trailing forecaster window, the scorer and
    both thresholds on the trailing detector window of residuals, and the
    residual IQR at fit time becomes the range baseline for drift checks.
    """
    interval = history.interval
    fc_points = config.forecaster_window // interval
    det_points = config.detector_window // interval
    if det_points < 2:
        raise PipelineError(
            f"detector window of {config.detector_window}s holds fewer than "
            f"2 points at {interval}s cadence"
        )
    if len(history) < fc_points:
        raise InsufficientHistoryError(
            f"history spans {history.span_seconds}s but the forecaster window "
            f"requires {config.forecaster_window}s ({fc_points} points at "
            f"{interval}s cadence)"
        )
    window = history.slice(len(history) - fc_points, len(history))
    forecaster_model, window_residuals = _fit_stage_models(window, config)
    det_residuals = window_residuals.slice(
        len(window_residuals) - det_points, len(window_residuals)
    )
    try:
        scorer_model = fit_zscore(det_residuals)
        det_scores = score_zscore(scorer_model, det_residuals)
    except DegenerateWindowError as e:
        origin = stream_id if stream_id is not None else "<unnamed stream>"
        raise DegenerateWindowError(f"stream {origin}: {e}") from e
    thresholds = _select_thresholds(det_scores, config)
    baseline = RangeBaseline(
        iqr_at_fit=iqr(det_residuals.values),
        shrink_factor=config.range_shrink_factor,
    )
    return PipelineState(
        config=config,
        interval=interval,
        stream_id=stream_id,
        forecaster_model=forecaster_model,
        scorer_model=scorer_model,
        thresholds=thresholds,
        baseline=baseline,
        raw_values=window.values,
        residual_values=det_residuals.values,
        score_values=det_scores.scores,
        last_value=float(window.values[-1]),
        next_timestamp=history.end + interval,
    )


def _check_drift(state: PipelineState) -> DriftStatus | None:
    """Run both per-tail drift checks and apply the recovery playbook.

    Constraint violations (either tail) outrank range shrinkage. A
    violation re-runs threshold selection only; shrinkage refits the
    forecaster and scorer on the current windows, reselects thresholds, and
    rebases the range baseline.
    """
    scores = state._score_window_series()
    resids = state._residual_window_series()
    config = state.config
    right_status = observe_window(
        scores, resids, state.thresholds.right, config.right, state.baseline
    )
    left_status = observe_window(
        scores, resids, state.thresholds.left, config.left, state.baseline
    )
    statuses = (right_status, left_status)
    violation = next(
        (s for s in statuses if s.kind is DriftKind.CONSTRAINT_VIOLATION), None
    )
    if violation is not None:
        state.thresholds = _select_thresholds(scores, config)
        return violation
    shrink = next((s for s in statuses if s.kind is DriftKind.RANGE_SHRINK), None)
    if shrink is not None:
        raw = state._raw_window_series()
        forecaster_model, window_residuals = _fit_stage_models(raw, config)
        det_points = len(state._residuals)
        det_residuals = window_residuals.slice(
            len(window_residuals) - det_points, len(window_residuals)
        )
        scorer_model = fit_zscore(det_residuals)
        det_scores = score_zscore(scorer_model, det_residuals)
        state.forecaster_model = forecaster_model
        state.scorer_model = scorer_model
        state._residuals.clear()
        state._residuals.extend(det_residuals.values)
        state._scores.clear()
        state._scores.extend(det_scores.scores)
        state.thresholds = _select_thresholds(det_scores, config)
        state.baseline = RangeBaseline(
            iqr_at_fit=iqr(det_residuals.values),
            shrink_factor=config.range_shrink_factor,
        )
        return shrink
    return None


def step(state: PipelineState, point: tuple[int, float]) -> PointVerdict:
    """Consume the next point of the stream and return its verdict.

    The point must land exactly on the next axis position; callers
    regularize gapped or out-of-order feeds before streaming. The point is
    labeled with the thresholds standing when it arrived; if its arrival
    completes a drift-check period, the check (and any recomputation) runs
    afterwards and the verdict carries the trigger.
    """
    timestamp, value = int(point[0]), float(point[1])
    if timestamp != state.next_timestamp:
        raise StreamOrderError(
            f"expected timestamp {state.next_timestamp}, got {timestamp} "
            "(out-of-order or gapped input)"
        )
    if not np.isfinite(value):
        raise StreamOrderError(f"non-finite value at timestamp {timestamp}")
    fc = state._forecast_point(timestamp)
    residual = value - fc
    m = state.scorer_model
    score = (residual - m.mu) / m.sigma
    label = int(
        merge_tail_labels(
            np.array([score]), state.left_threshold, state.right_threshold
        )[0]
    )
    left_thr, right_thr = state.left_threshold, state.right_threshold

    state._raw.append(value)
    state._residuals.append(residual)
    state._scores.append(score)
    state._last_value = value
    state.next_timestamp = timestamp + state.interval

    drift_event: DriftStatus | None = None
    if state.config.drift_check_every > 0:
        state._points_since_check += 1
        if state._points_since_check >= state.config.drift_check_every:
            state._points_since_check = 0
            drift_event = _check_drift(state)

    return PointVerdict(
        timestamp=timestamp,
        value=value,
        residual=residual,
        score=score,
        label=label,
        left_threshold=left_thr,
        right_threshold=right_thr,
        drift=drift_event,
    )


def batch_labels(state: PipelineState, future: TimeSeries) -> np.ndarray:
    """Label a whole span at once with the state's standing models.

    Pure with respect to the state: no windows move and no drift checks
    run. Streaming the same span with drift checks disabled produces
    exactly these labels.
    """
    if future.start != state.next_timestamp or future.interval != state.interval:
        raise StreamOrderError(
            "batch span must start at the next expected timestamp "
            f"({state.next_timestamp}), got {future.start}"
        )
    if state.forecaster_model is not None:
        ts = future.timestamps()
        dow = (ts // 86400 + 3) % 7
        slot = (ts % 86400) // state.forecaster_model.slot_seconds
        fc = state.forecaster_model.median[dow, slot]
        resid = future.values - fc
    else:
        prev = np.concatenate(([state._last_value], future.values[:-1]))
        resid = future.values - prev
    m = state.scorer_model
    scores = (resid - m.mu) / m.sigma
    return merge_tail_labels(scores, state.left_threshold, state.right_threshold)
