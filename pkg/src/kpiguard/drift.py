"""Concept-drift monitoring for live score and residual windows.

A standing threshold was chosen so that its outlier set is aperiodic and
rare; if the live window stops satisfying those constraints, the data has
drifted and the threshold must be recomputed upward (false-positive
control). Independently, if the residual operating range contracts well
below its level at fit time, typical scores can no longer reach the
threshold and it should be recomputed downward (false-negative control).
Constraint violations outrank range shrinkage when both fire.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import ScoreSeries, ThresholdConfig, TimeSeries, iqr
from .thresholding import ConstraintStatus, ThresholdDecision, check_constraints, label_anomalies


class DriftKind(Enum):
    NONE = "none"
    CONSTRAINT_VIOLATION = "constraint_violation"
    RANGE_SHRINK = "range_shrink"


@dataclass(frozen=True)
class DriftStatus:
    """Outcome of one drift check.

    For a constraint violation ``constraint`` holds the failing check; for
    range shrinkage ``range_ratio`` holds live IQR / fit IQR. ``at`` is the
    timestamp of the last point in the checked window. A NONE status carries
    no detail fields.
    """

    kind: DriftKind
    at: int | None = None
    constraint: ConstraintStatus | None = None
    range_ratio: float | None = None

    def __post_init__(self) -> None:
        if self.kind is DriftKind.NONE:
            assert self.constraint is None and self.range_ratio is None

    @property
    def triggered(self) -> bool:
        return self.kind is not DriftKind.NONE


NO_DRIFT = DriftStatus(kind=DriftKind.NONE)


@dataclass(frozen=True)
class RangeBaseline:
    """Residual spread recorded when the current threshold was fit.

    ``shrink_factor`` is the fraction of the fit-time IQR below which the
    live operating range counts as shrunk. Range growth needs no separate
    trigger: a grown range produces extra exceedances and surfaces as a
    constraint violation.
    """

    iqr_at_fit: float
    shrink_factor: float = 0.5

    def __post_init__(self) -> None:
        if self.iqr_at_fit < 0:
            raise ValueError(f"iqr_at_fit must be >= 0, got {self.iqr_at_fit}")
        if not 0.0 < self.shrink_factor < 1.0:
            raise ValueError(
                f"shrink_factor must be in (0, 1), got {self.shrink_factor}"
            )


def observe_window(
    live_scores: ScoreSeries,
    live_residuals: TimeSeries,
    decision: ThresholdDecision,
    config: ThresholdConfig,
    baseline: RangeBaseline,
) -> DriftStatus:
    """Check one live window against the standing threshold, in priority order.

    First the window is labeled with the standing threshold and the labeled
    outlier set is tested against both selection constraints; a failure is a
    CONSTRAINT_VIOLATION. Otherwise, if the live residual IQR has fallen
    below ``shrink_factor`` times the fit-time IQR, the result is
    RANGE_SHRINK with the observed ratio. Otherwise NONE.
    """
    if len(live_scores) == 0 or len(live_residuals) == 0:
        raise ValueError("drift check needs non-empty windows")
    at = live_scores.timestamp_of(len(live_scores) - 1)
    labels = label_anomalies(live_scores, decision.threshold, decision.tail)
    outlier_idx = np.flatnonzero(labels != 0)
    status = check_constraints(
        outlier_idx,
        len(live_scores),
        live_scores.start,
        live_scores.interval,
        config,
    )
    if not status.ok:
        return DriftStatus(
            kind=DriftKind.CONSTRAINT_VIOLATION, at=at, constraint=status
        )
    if baseline.iqr_at_fit > 0:
        ratio = iqr(live_residuals.values) / baseline.iqr_at_fit
        if ratio < baseline.shrink_factor:
            return DriftStatus(kind=DriftKind.RANGE_SHRINK, at=at, range_ratio=ratio)
    return NO_DRIFT
